//! Product quadrature for the area kernels `1/(zeta - z)` and `1/(zeta - z)^2`.
//!
//! Each ring is expanded in angular Fourier modes; the angular integral of
//! every mode against the kernel is done in closed form (a Laurent series
//! split at `|zeta| = |z|`). Along the radius the ring coefficients are
//! reconstructed as a quadratic on each cell and integrated exactly against
//! the radial factor. Near the center the reconstruction uses the parity
//! `c_q(-rho) = (-1)^q c_q(rho)` of smooth functions.

use rayon::prelude::*;

use crate::grid::DiscGrid;
use crate::C64;

/// Kernel order: 1 for `1/(zeta - z)`, 2 for `1/(zeta - z)^2`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub(crate) enum Kernel {
    Cauchy,
    Beurling,
}

impl Kernel {
    fn order(self) -> i64 {
        match self {
            Kernel::Cauchy => 1,
            Kernel::Beurling => 2,
        }
    }
}

struct RingModel {
    // per ring: value, slope, curvature of each angular mode
    c: Vec<Vec<C64>>,
    d: Vec<Vec<C64>>,
    e: Vec<Vec<C64>>,
}

fn ring_model(grid: &DiscGrid, values: &[C64]) -> RingModel {
    let n_t = grid.n_t();
    let n_r = grid.n_r();
    let half = (n_t / 2) as i64;
    let c: Vec<Vec<C64>> = (0..n_r)
        .into_par_iter()
        .map(|i| grid.ring_coefficients(&values[i * n_t..(i + 1) * n_t], true))
        .collect();
    let inner: Vec<C64> = c[0]
        .iter()
        .enumerate()
        .map(|(k, v)| if (k as i64 - half) % 2 == 0 { *v } else { -v })
        .collect();
    let outer: Vec<C64> = (0..=n_t)
        .map(|k| 3.0 * c[n_r - 1][k] - 3.0 * c[n_r - 2][k] + c[n_r - 3][k])
        .collect();
    let h = grid.dr();
    let mut d = Vec::with_capacity(n_r);
    let mut e = Vec::with_capacity(n_r);
    for i in 0..n_r {
        let lo = if i == 0 { &inner } else { &c[i - 1] };
        let hi = if i + 1 == n_r { &outer } else { &c[i + 1] };
        d.push(
            (0..=n_t)
                .map(|k| (hi[k] - lo[k]) / (2.0 * h))
                .collect::<Vec<_>>(),
        );
        e.push(
            (0..=n_t)
                .map(|k| (hi[k] - 2.0 * c[i][k] + lo[k]) / (h * h))
                .collect::<Vec<_>>(),
        );
    }
    RingModel { c, d, e }
}

/// `int_{u0}^{u1} u^{s-1} du` for integer `s`.
#[inline]
fn power_integral(u0: f64, u1: f64, s: i32, p0: f64, p1: f64) -> f64 {
    if s == 0 {
        (u1 / u0).ln()
    } else {
        (p1 - p0) / s as f64
    }
}

/// Adds the contribution of the radial interval `[x0, x1]` of cell `i`,
/// evaluated at radius `r`, to the per-mode accumulator.
#[allow(clippy::too_many_arguments)]
fn add_interval(
    model: &RingModel,
    i: usize,
    center: f64,
    x0: f64,
    x1: f64,
    r: f64,
    kernel: Kernel,
    above: bool,
    half: i64,
    acc: &mut [C64],
) {
    let o = kernel.order();
    let (q_lo, q_hi) = if above { (o, half) } else { (-half, 0) };
    let u0 = x0 / r;
    let u1 = x1 / r;
    // r^{t+2-o}, t = 0, 1, 2
    let rs0 = if o == 1 { r } else { 1.0 };
    let rs = [rs0, rs0 * r, rs0 * r * r];
    let sign = if above { -2.0 } else { 2.0 };
    let (c, d, e) = (&model.c[i], &model.d[i], &model.e[i]);
    for q in q_lo..=q_hi {
        let kappa = if o == 1 { 1.0 } else { (q - 1) as f64 };
        let s0 = (2 - q) as i32;
        let mut p0 = u0.powi(s0);
        let mut p1 = u1.powi(s0);
        let mut m = [0.0; 3];
        for (t, mt) in m.iter_mut().enumerate() {
            if t > 0 {
                p0 *= u0;
                p1 *= u1;
            }
            *mt = rs[t] * power_integral(u0, u1, s0 + t as i32, p0, p1);
        }
        // moments about the cell center
        let n0 = m[0];
        let n1 = m[1] - center * m[0];
        let n2 = m[2] - 2.0 * center * m[1] + center * center * m[0];
        let k = (q + half) as usize;
        acc[k] += (c[k] * n0 + d[k] * n1 + e[k] * (0.5 * n2)) * (sign * kappa);
    }
}

fn modes_at_radius(grid: &DiscGrid, model: &RingModel, r: f64, kernel: Kernel) -> Vec<C64> {
    let half = (grid.n_t() / 2) as i64;
    let h = grid.dr();
    let mut acc = vec![C64::new(0.0, 0.0); grid.n_t() + 1];
    for (i, &rho) in grid.radii().iter().enumerate() {
        let a = rho - 0.5 * h;
        let b = rho + 0.5 * h;
        if b <= r {
            add_interval(model, i, rho, a, b, r, kernel, false, half, &mut acc);
        } else if a >= r {
            add_interval(model, i, rho, a, b, r, kernel, true, half, &mut acc);
        } else {
            add_interval(model, i, rho, a, r, r, kernel, false, half, &mut acc);
            add_interval(model, i, rho, r, b, r, kernel, true, half, &mut acc);
        }
    }
    acc
}

/// Applies `-(1/pi) int_D f(zeta) K(zeta - z) dA(zeta)` to the interior
/// samples `values`, returning interior and boundary outputs.
///
/// For the second-order kernel the result is the angular-first principal
/// value; callers subtract `f(z)` times the transform of `1`.
pub(crate) fn area_transform(
    grid: &DiscGrid,
    values: &[C64],
    kernel: Kernel,
) -> (Vec<C64>, Vec<C64>) {
    let n_t = grid.n_t();
    let model = ring_model(grid, values);
    let p0 = -((n_t / 2) as i64) - kernel.order();
    let mut radii: Vec<(f64, bool)> = grid.radii().iter().map(|&r| (r, true)).collect();
    radii.push((grid.radius(), false));
    let rings: Vec<Vec<C64>> = radii
        .par_iter()
        .map(|&(r, half)| {
            let acc = modes_at_radius(grid, &model, r, kernel);
            let mut out = vec![C64::new(0.0, 0.0); n_t];
            grid.synthesize(&acc, p0, half, &mut out);
            out
        })
        .collect();
    let mut interior = Vec::with_capacity(grid.n_interior());
    for ring in &rings[..grid.n_r()] {
        interior.extend_from_slice(ring);
    }
    (interior, rings[grid.n_r()].clone())
}
