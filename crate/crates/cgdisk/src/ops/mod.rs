//! Cauchy-Green operators on the disk and their derivative calculus.
//!
//! * `T f(z) = -(1/pi) int_D f(zeta) / (zeta - z) dA`, with `dbar T f = f`;
//! * `2T f(z) = -(1/pi) int_D (f(zeta) - f(z)) / (zeta - z)^2 dA = d T f`;
//! * `S`, `S_b` and their conjugates act on boundary traces.

mod area;
pub mod boundary;
pub mod green;
pub mod word;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{DiscGrid, ScalarField};
use crate::C64;
use area::{area_transform, Kernel};

pub use boundary::{
    apply_dbark_sbar_b, apply_dk_sb, apply_s, apply_sb, apply_sbar, apply_sbar_b, boundary_at,
    BoundaryKernel, BoundaryRule,
};
pub use green::{apply_high_t, compose_green};
pub use word::{reduce_word, Atom, OperatorWord};

/// Cauchy transform `T f`.
pub fn apply_t(field: &ScalarField) -> ScalarField {
    let grid = field.grid();
    let (interior, boundary) = area_transform(grid, field.interior(), Kernel::Cauchy);
    ScalarField::new(grid.clone(), interior, boundary).expect("grid-shaped output")
}

/// `conj(T(conj f))`.
pub fn apply_tbar(field: &ScalarField) -> ScalarField {
    apply_t(&field.conj()).conj()
}

fn beurling_of_one(grid: &Arc<DiscGrid>) -> &(Vec<C64>, Vec<C64>) {
    grid.q2_unit.get_or_init(|| {
        let one = vec![C64::new(1.0, 0.0); grid.n_interior()];
        area_transform(grid, &one, Kernel::Beurling)
    })
}

/// `2T f` with the integrand `f(zeta) - f(z)`; `f(z)` is read from the
/// field's own interior and boundary samples.
pub fn apply_t2(field: &ScalarField) -> ScalarField {
    let grid = field.grid();
    let (mut interior, mut boundary) = area_transform(grid, field.interior(), Kernel::Beurling);
    let (one_i, one_b) = beurling_of_one(grid);
    for ((o, f), u) in interior.iter_mut().zip(field.interior()).zip(one_i) {
        *o -= f * u;
    }
    for ((o, f), u) in boundary.iter_mut().zip(field.boundary()).zip(one_b) {
        *o -= f * u;
    }
    ScalarField::new(grid.clone(), interior, boundary).expect("grid-shaped output")
}

/// Like [`apply_t2`] but with the subtracted values supplied separately.
pub fn apply_t2_with(field: &ScalarField, at_eval: &ScalarField) -> Result<ScalarField> {
    if !field.grid().same_shape(at_eval.grid()) {
        return Err(Error::GridMismatch);
    }
    let grid = field.grid();
    let (mut interior, mut boundary) = area_transform(grid, field.interior(), Kernel::Beurling);
    let (one_i, one_b) = beurling_of_one(grid);
    for ((o, f), u) in interior.iter_mut().zip(at_eval.interior()).zip(one_i) {
        *o -= f * u;
    }
    for ((o, f), u) in boundary.iter_mut().zip(at_eval.boundary()).zip(one_b) {
        *o -= f * u;
    }
    ScalarField::new(grid.clone(), interior, boundary)
}

/// `conj(2T(conj f))`, the `dbar` derivative of `Tbar f`.
pub fn apply_t2bar(field: &ScalarField) -> ScalarField {
    apply_t2(&field.conj()).conj()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::sample;

    fn err(a: &ScalarField, b: &ScalarField) -> f64 {
        a.sub(b).unwrap().sup()
    }

    #[test]
    fn cauchy_transform_of_antiholomorphic_powers() {
        let g = DiscGrid::new(1.0, 16, 32).unwrap();
        for l in 0..3 {
            let f = sample(&g, |z| z.conj().powi(l)).unwrap();
            let exact = sample(&g, |z| z.conj().powi(l + 1) / (l as f64 + 1.0)).unwrap();
            assert!(err(&apply_t(&f), &exact) < 1e-13, "l = {l}");
        }
    }

    #[test]
    fn cauchy_transform_of_zeta() {
        let r = 0.7;
        let g = DiscGrid::new(r, 16, 32).unwrap();
        let f = sample(&g, |z| z).unwrap();
        let exact = sample(&g, |z| z * z.conj() - r * r).unwrap();
        assert!(err(&apply_t(&f), &exact) < 1e-13);
    }

    #[test]
    fn beurling_identities() {
        let g = DiscGrid::new(1.0, 16, 32).unwrap();
        let one = ScalarField::constant(&g, C64::new(1.0, 0.0));
        assert_eq!(apply_t2(&one).sup(), 0.0);
        let z = sample(&g, |z| z).unwrap();
        let zb = sample(&g, |z| z.conj()).unwrap();
        assert!(err(&apply_t2(&z), &zb) < 1e-13);
        assert!(apply_t2(&zb).sup() < 1e-13);
    }

    #[test]
    fn conjugate_operator_is_bit_exact() {
        let g = DiscGrid::new(1.0, 8, 16).unwrap();
        let f = sample(&g, |z| (z * 1.3).exp() + z.conj()).unwrap();
        let a = apply_tbar(&f);
        let b = apply_t(&f.conj()).conj();
        assert!(a.values().zip(b.values()).all(|(x, y)| x == y));
    }
}
