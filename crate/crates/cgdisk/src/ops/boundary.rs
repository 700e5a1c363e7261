//! Cauchy boundary integrals over `|zeta| = R`.
//!
//! Two rules are offered. `Spectral` integrates the trigonometric
//! interpolant of the boundary trace exactly by residues, which is valid at
//! every node including the boundary ring. `Trapezoid` is the plain periodic
//! trapezoidal rule for the kernel and refuses points with `|z| > 0.95 R`.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{DiscGrid, ScalarField};
use crate::C64;

/// Points closer to the circle than this fraction of `R` are rejected by the
/// trapezoidal rule.
pub const TRAPEZOID_LIMIT: f64 = 0.95;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum BoundaryRule {
    #[default]
    Spectral,
    Trapezoid,
}

fn check_trace(grid: &DiscGrid, trace: &[C64]) -> Result<()> {
    if trace.len() != grid.n_boundary() {
        return Err(Error::LengthMismatch {
            expected: grid.n_boundary(),
            got: trace.len(),
        });
    }
    Ok(())
}

/// Coefficients of `e^{ik theta}` for `k = 0 ..= n_t/2`.
fn positive_modes(grid: &DiscGrid, trace: &[C64]) -> Vec<C64> {
    let c = grid.ring_coefficients(trace, false);
    c[grid.n_t() / 2..].to_vec()
}

/// Horner evaluation of `sum_n b[n] w^n`.
#[inline]
fn horner(b: &[C64], w: C64) -> C64 {
    b.iter().rev().fold(C64::new(0.0, 0.0), |acc, &c| acc * w + c)
}

fn eval_polynomial(grid: &Arc<DiscGrid>, b: &[C64]) -> ScalarField {
    let r = grid.radius();
    let interior = grid
        .interior_nodes()
        .par_iter()
        .map(|&z| horner(b, z / r))
        .collect();
    let boundary = grid
        .boundary_nodes()
        .iter()
        .map(|&z| horner(b, z / r))
        .collect();
    ScalarField::new(grid.clone(), interior, boundary).expect("grid-shaped output")
}

/// Falling factorial `n (n-1) ... (n-k+1)`.
fn falling(n: usize, k: usize) -> f64 {
    (0..k).map(|i| (n - i) as f64).product()
}

/// `S g(z) = (1/2 pi i) int_C g(zeta) / (zeta - z) d zeta` on every node.
pub fn apply_s(grid: &Arc<DiscGrid>, trace: &[C64]) -> Result<ScalarField> {
    check_trace(grid, trace)?;
    Ok(eval_polynomial(grid, &positive_modes(grid, trace)))
}

/// `d^k S_b g`, with `S_b g(z) = (1/2 pi i) int_C g(zeta) / (zeta - z) d conj(zeta)`.
pub fn apply_dk_sb(grid: &Arc<DiscGrid>, k: usize, trace: &[C64]) -> Result<ScalarField> {
    check_trace(grid, trace)?;
    let c = positive_modes(grid, trace);
    let scale = grid.radius().powi(-(k as i32));
    // mode j contributes -c_j R^{2-j} (j-2)!/(j-2-k)! z^{j-2-k}
    let b: Vec<C64> = (k + 2..c.len())
        .map(|j| -c[j] * (falling(j - 2, k) * scale))
        .collect();
    Ok(eval_polynomial(grid, &b))
}

pub fn apply_sb(grid: &Arc<DiscGrid>, trace: &[C64]) -> Result<ScalarField> {
    apply_dk_sb(grid, 0, trace)
}

/// Conjugate operator `conj(S(conj g))`.
pub fn apply_sbar(grid: &Arc<DiscGrid>, trace: &[C64]) -> Result<ScalarField> {
    let t: Vec<C64> = trace.iter().map(|v| v.conj()).collect();
    Ok(apply_s(grid, &t)?.conj())
}

/// `dbar^k` of `conj(S_b(conj g))`.
pub fn apply_dbark_sbar_b(grid: &Arc<DiscGrid>, k: usize, trace: &[C64]) -> Result<ScalarField> {
    let t: Vec<C64> = trace.iter().map(|v| v.conj()).collect();
    Ok(apply_dk_sb(grid, k, &t)?.conj())
}

pub fn apply_sbar_b(grid: &Arc<DiscGrid>, trace: &[C64]) -> Result<ScalarField> {
    apply_dbark_sbar_b(grid, 0, trace)
}

/// Which boundary kernel to evaluate at explicit points.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryKernel {
    /// `S`
    Cauchy,
    /// `d^k S_b`
    DkSb(usize),
}

/// Evaluates a boundary operator at arbitrary points with the chosen rule.
pub fn boundary_at(
    grid: &Arc<DiscGrid>,
    kernel: BoundaryKernel,
    trace: &[C64],
    points: &[C64],
    rule: BoundaryRule,
) -> Result<Vec<C64>> {
    check_trace(grid, trace)?;
    let r = grid.radius();
    match rule {
        BoundaryRule::Spectral => {
            let c = positive_modes(grid, trace);
            let b: Vec<C64> = match kernel {
                BoundaryKernel::Cauchy => c,
                BoundaryKernel::DkSb(k) => {
                    let scale = r.powi(-(k as i32));
                    (k + 2..c.len())
                        .map(|j| -c[j] * (falling(j - 2, k) * scale))
                        .collect()
                }
            };
            Ok(points.iter().map(|&z| horner(&b, z / r)).collect())
        }
        BoundaryRule::Trapezoid => {
            let limit = TRAPEZOID_LIMIT * r;
            if let Some(&z) = points.iter().find(|z| z.norm() > limit) {
                return Err(Error::NearBoundary { z, limit });
            }
            let dt = grid.dtheta();
            let nodes = grid.boundary_nodes();
            Ok(points
                .iter()
                .map(|&z| {
                    let mut acc = C64::new(0.0, 0.0);
                    for (zeta, g) in nodes.iter().zip(trace) {
                        acc += match kernel {
                            // d zeta = i zeta d theta
                            BoundaryKernel::Cauchy => g * zeta / (zeta - z),
                            // d conj(zeta) = -i conj(zeta) d theta
                            BoundaryKernel::DkSb(k) => {
                                -g * zeta.conj() / (zeta - z).powi(k as i32 + 1)
                            }
                        };
                    }
                    let fact = match kernel {
                        BoundaryKernel::Cauchy => 1.0,
                        BoundaryKernel::DkSb(k) => falling(k, k),
                    };
                    acc * (fact * dt / (2.0 * std::f64::consts::PI))
                })
                .collect())
        }
    }
}
