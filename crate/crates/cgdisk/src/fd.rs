//! Discrete Wirtinger derivatives of grid fields.
//!
//! Two flavours: plain polar central differences on interior nodes, and a
//! Fourier-in-angle / seven-point-in-radius stack that also covers the
//! boundary ring. Neither is used inside the Picard loop.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::Result;
use crate::grid::{DiscGrid, ScalarField};
use crate::holder::{jet_pairs, JetField};
use crate::C64;

/// `(d f, dbar f)` at interior nodes by second-order polar central
/// differences. The innermost ring differences across the center; the
/// outermost uses the boundary ring, cubically interpolated to the interior angles.
pub fn central_wirtinger(field: &ScalarField) -> (Vec<C64>, Vec<C64>) {
    let g = field.grid();
    let (n_r, n_t, h, dt) = (g.n_r(), g.n_t(), g.dr(), g.dtheta());
    let v = field.interior();
    let b = field.boundary();
    let at = |i: usize, j: usize| v[i * n_t + j % n_t];
    let mut d = Vec::with_capacity(v.len());
    let mut db = Vec::with_capacity(v.len());
    for i in 0..n_r {
        let r = g.radii()[i];
        for j in 0..n_t {
            let f_r = if i == 0 {
                (at(1, j) - at(0, j + n_t / 2)) / (2.0 * h)
            } else if i + 1 < n_r {
                (at(i + 1, j) - at(i - 1, j)) / (2.0 * h)
            } else {
                let bj = |k: usize| b[(j + k) % n_t];
                let outer = ((bj(0) + bj(1)) * 9.0 - bj(n_t - 1) - bj(2)) / 16.0;
                (outer * 4.0 - at(i, j) * 3.0 - at(i - 1, j)) / (3.0 * h)
            };
            let f_t = (at(i, j + 1) - at(i, j + n_t - 1)) / (2.0 * dt);
            let e = g.twiddle(2 * j as i64 + 1);
            let i_over_r = C64::new(0.0, 1.0 / r);
            d.push(e.conj() * 0.5 * (f_r - i_over_r * f_t));
            db.push(e * 0.5 * (f_r + i_over_r * f_t));
        }
    }
    (d, db)
}

/// Weights of the first derivative at `x0` on `nodes`.
fn derivative_weights(nodes: &[f64], x0: f64) -> Vec<f64> {
    (0..nodes.len())
        .map(|k| {
            let mut w = 0.0;
            for l in (0..nodes.len()).filter(|&l| l != k) {
                let mut p = 1.0 / (nodes[k] - nodes[l]);
                for m in (0..nodes.len()).filter(|&m| m != k && m != l) {
                    p *= (x0 - nodes[m]) / (nodes[k] - nodes[m]);
                }
                w += p;
            }
            w
        })
        .collect()
}

const STENCIL: usize = 7;

/// `(d f, dbar f)` on every node.
pub fn wirtinger(field: &ScalarField) -> (ScalarField, ScalarField) {
    let g = field.grid();
    let (n_r, n_t) = (g.n_r(), g.n_t());
    let half = (n_t / 2) as i64;
    let mut coeffs: Vec<Vec<C64>> = (0..n_r)
        .into_par_iter()
        .map(|i| g.ring_coefficients(&field.interior()[i * n_t..(i + 1) * n_t], true))
        .collect();
    coeffs.push(g.ring_coefficients(field.boundary(), false));
    // radial positions: mirrored rings, the rings, then R
    let ghosts = STENCIL / 2 + 1;
    let mut xs: Vec<f64> = (0..ghosts).rev().map(|k| -g.radii()[k]).collect();
    xs.extend_from_slice(g.radii());
    xs.push(g.radius());
    let value = |pos: usize, k: usize| -> C64 {
        if pos < ghosts {
            let c = coeffs[ghosts - 1 - pos][k];
            let q = k as i64 - half;
            if q.rem_euclid(2) == 0 {
                c
            } else {
                -c
            }
        } else {
            coeffs[pos - ghosts][k]
        }
    };
    let rings: Vec<(Vec<C64>, Vec<C64>)> = (0..=n_r)
        .into_par_iter()
        .map(|i| {
            let pos = i + ghosts;
            let start = pos.saturating_sub(STENCIL / 2).min(xs.len() - STENCIL);
            let w = derivative_weights(&xs[start..start + STENCIL], xs[pos]);
            let r = xs[pos];
            let mut ad = Vec::with_capacity(n_t + 1);
            let mut adb = Vec::with_capacity(n_t + 1);
            for k in 0..=n_t {
                let q = (k as i64 - half) as f64;
                let c = value(pos, k);
                let dc: C64 = w.iter().enumerate().map(|(s, &ws)| value(start + s, k) * ws).sum();
                ad.push((dc + c * (q / r)) * 0.5);
                adb.push((dc - c * (q / r)) * 0.5);
            }
            let is_half = i < n_r;
            let mut od = vec![C64::new(0.0, 0.0); n_t];
            let mut odb = vec![C64::new(0.0, 0.0); n_t];
            g.synthesize(&ad, -half - 1, is_half, &mut od);
            g.synthesize(&adb, -half + 1, is_half, &mut odb);
            (od, odb)
        })
        .collect();
    let build = |pick: fn(&(Vec<C64>, Vec<C64>)) -> &Vec<C64>| {
        let mut interior = Vec::with_capacity(g.n_interior());
        for ring in &rings[..n_r] {
            interior.extend_from_slice(pick(ring));
        }
        ScalarField::new(g.clone(), interior, pick(&rings[n_r]).clone()).expect("grid-shaped")
    };
    (build(|r| &r.0), build(|r| &r.1))
}

/// Jet of depth `m` built from `field` by repeated discrete differentiation.
pub fn derivative_jet(field: &ScalarField, m: usize) -> Result<JetField> {
    let grid: &Arc<DiscGrid> = field.grid();
    let mut entries: Vec<ScalarField> = Vec::new();
    let mut index = std::collections::HashMap::new();
    for (k, (i, j)) in jet_pairs(m).enumerate() {
        let f = if (i, j) == (0, 0) {
            field.clone()
        } else if i > 0 {
            wirtinger(&entries[index[&(i - 1, j)]]).0
        } else {
            wirtinger(&entries[index[&(i, j - 1)]]).1
        };
        entries.push(f);
        index.insert((i, j), k);
    }
    JetField::from_entries(grid.clone(), m, 1, entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::sample;

    #[test]
    fn weights_differentiate_quartics() {
        let xs = [-0.3, 0.1, 0.2, 0.55, 0.6];
        let w = derivative_weights(&xs, 0.2);
        let d: f64 = xs.iter().zip(&w).map(|(x, w)| w * x.powi(4)).sum();
        assert!((d - 4.0 * 0.2f64.powi(3)).abs() < 1e-12);
    }

    #[test]
    fn spectral_stack_on_polynomials() {
        let g = DiscGrid::new(0.8, 16, 32).unwrap();
        let f = sample(&g, |z| z * z * z.conj() + z.conj().powi(2)).unwrap();
        let (d, db) = wirtinger(&f);
        let ed = sample(&g, |z| z * z.conj() * 2.0).unwrap();
        let edb = sample(&g, |z| z * z + z.conj() * 2.0).unwrap();
        assert!(d.sub(&ed).unwrap().sup() < 1e-11);
        assert!(db.sub(&edb).unwrap().sup() < 1e-11);
    }

    #[test]
    fn central_differences_are_second_order() {
        let err = |n: usize| {
            let g = DiscGrid::new(1.0, n, 2 * n).unwrap();
            let f = sample(&g, |z| (z + z.conj() * 0.5).exp()).unwrap();
            let (_, db) = central_wirtinger(&f);
            g.interior_nodes()
                .iter()
                .zip(&db)
                .map(|(&z, &v)| (v - (z + z.conj() * 0.5).exp() * 0.5).norm())
                .fold(0.0, f64::max)
        };
        let (a, b) = (err(32), err(64));
        assert!(b < a / 3.0, "{a} {b}");
    }
}
