//! Polar discretization of the closed disk `|z| <= R`.
//!
//! Interior nodes are the centers of `n_r x n_t` polar cells, stored
//! radial-major. Boundary nodes sit on `|z| = R` at angles `j * 2pi / n_t`,
//! half a cell away from the interior angular positions.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::C64;

/// Number of random node pairs in the Hölder estimate.
pub const HOLDER_RANDOM_PAIRS: usize = 100_000;
const HOLDER_SEED: u64 = 0x5eed_0a1f;

/// Closed disk of radius `R` split into polar midpoint cells.
#[derive(Debug)]
pub struct DiscGrid {
    radius: f64,
    n_r: usize,
    n_t: usize,
    dr: f64,
    dt: f64,
    radii: Vec<f64>,
    nodes: Vec<C64>,
    weights: Vec<f64>,
    boundary: Vec<C64>,
    // e^{i pi k / n_t} for k in 0..2 n_t
    twiddle: Vec<C64>,
    pub(crate) q2_unit: OnceLock<(Vec<C64>, Vec<C64>)>,
    pairs: OnceLock<Vec<(u32, u32)>>,
}

impl DiscGrid {
    /// Builds a grid with `n_r` rings and `n_t` cells per ring.
    pub fn new(radius: f64, n_r: usize, n_t: usize) -> Result<Arc<Self>> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidRadius(radius));
        }
        if n_r < 4 {
            return Err(Error::TooFewRadialCells(n_r));
        }
        if n_t < 8 {
            return Err(Error::TooFewAngularCells(n_t));
        }
        if n_t % 2 != 0 {
            return Err(Error::OddAngularCount(n_t));
        }
        let dr = radius / n_r as f64;
        let dt = 2.0 * PI / n_t as f64;
        let twiddle: Vec<C64> = (0..2 * n_t)
            .map(|k| C64::from_polar(1.0, PI * k as f64 / n_t as f64))
            .collect();
        let radii: Vec<f64> = (0..n_r).map(|i| (i as f64 + 0.5) * dr).collect();
        let mut nodes = Vec::with_capacity(n_r * n_t);
        let mut weights = Vec::with_capacity(n_r * n_t);
        for &r in &radii {
            for j in 0..n_t {
                nodes.push(twiddle[2 * j + 1] * r);
                weights.push(r * dr * dt);
            }
        }
        let boundary = (0..n_t).map(|j| twiddle[2 * j] * radius).collect();
        Ok(Arc::new(Self {
            radius,
            n_r,
            n_t,
            dr,
            dt,
            radii,
            nodes,
            weights,
            boundary,
            twiddle,
            q2_unit: OnceLock::new(),
            pairs: OnceLock::new(),
        }))
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
    pub fn n_r(&self) -> usize {
        self.n_r
    }
    pub fn n_t(&self) -> usize {
        self.n_t
    }
    pub fn dr(&self) -> f64 {
        self.dr
    }
    pub fn dtheta(&self) -> f64 {
        self.dt
    }
    /// Ring (cell-center) radii.
    pub fn radii(&self) -> &[f64] {
        &self.radii
    }
    pub fn interior_nodes(&self) -> &[C64] {
        &self.nodes
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    pub fn boundary_nodes(&self) -> &[C64] {
        &self.boundary
    }
    /// Arc length carried by each boundary node.
    pub fn arc_weight(&self) -> f64 {
        self.radius * self.dt
    }
    pub fn n_interior(&self) -> usize {
        self.nodes.len()
    }
    pub fn n_boundary(&self) -> usize {
        self.boundary.len()
    }
    /// Interior nodes followed by boundary nodes.
    pub fn all_nodes(&self) -> impl Iterator<Item = C64> + '_ {
        self.nodes.iter().chain(self.boundary.iter()).copied()
    }

    /// Node pairs (indices into [`DiscGrid::all_nodes`] order) used by the
    /// sampled Hölder quotient: angular and radial neighbours, diametric
    /// pairs on every ring and a fixed-seed random set.
    pub fn holder_pairs(&self) -> &[(u32, u32)] {
        self.pairs.get_or_init(|| {
            use rand::{Rng, SeedableRng};
            let n_t = self.n_t;
            let n_i = self.n_interior();
            let total = (n_i + n_t) as u32;
            let at = |ring: usize, j: usize| (ring * n_t + j % n_t) as u32;
            let mut out = Vec::with_capacity(4 * total as usize + HOLDER_RANDOM_PAIRS);
            for ring in 0..=self.n_r {
                for j in 0..n_t {
                    out.push((at(ring, j), at(ring, j + 1)));
                    if j < n_t / 2 {
                        out.push((at(ring, j), at(ring, j + n_t / 2)));
                    }
                    if ring + 1 < self.n_r {
                        out.push((at(ring, j), at(ring + 1, j)));
                    } else if ring + 1 == self.n_r {
                        // boundary angles sit half a cell from interior ones
                        out.push((at(ring, j), at(ring + 1, j)));
                        out.push((at(ring, j), at(ring + 1, j + 1)));
                    }
                }
            }
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(HOLDER_SEED);
            let target = out.len() + HOLDER_RANDOM_PAIRS;
            while out.len() < target {
                let a = rng.gen_range(0..total);
                let b = rng.gen_range(0..total);
                if a != b {
                    out.push((a, b));
                }
            }
            out
        })
    }

    pub(crate) fn same_shape(&self, other: &DiscGrid) -> bool {
        self.radius == other.radius && self.n_r == other.n_r && self.n_t == other.n_t
    }

    /// `e^{i pi k / n_t}` with `k` taken modulo `2 n_t`.
    #[inline]
    pub(crate) fn twiddle(&self, k: i64) -> C64 {
        let m = 2 * self.n_t as i64;
        self.twiddle[k.rem_euclid(m) as usize]
    }

    /// Angular Fourier coefficients of one ring of samples.
    ///
    /// Returns `n_t + 1` coefficients for modes `-n_t/2 ..= n_t/2`; the
    /// Nyquist pair shares the aliased energy equally. `half` selects the
    /// interior angular positions (offset by half a cell).
    pub(crate) fn ring_coefficients(&self, values: &[C64], half: bool) -> Vec<C64> {
        let n = self.n_t as i64;
        let off = i64::from(half);
        let inv = 1.0 / self.n_t as f64;
        (-n / 2..=n / 2)
            .map(|q| {
                let mut acc = C64::new(0.0, 0.0);
                for (j, v) in values.iter().enumerate() {
                    acc += v * self.twiddle(-q * (2 * j as i64 + off));
                }
                let scale = if q.abs() == n / 2 { 0.5 * inv } else { inv };
                acc * scale
            })
            .collect()
    }

    /// Evaluates `sum_p a[p] e^{i (p0 + p) phi_j}` at the ring angles.
    pub(crate) fn synthesize(&self, coeffs: &[C64], p0: i64, half: bool, out: &mut [C64]) {
        let off = i64::from(half);
        for (j, o) in out.iter_mut().enumerate() {
            let step = 2 * j as i64 + off;
            let mut acc = C64::new(0.0, 0.0);
            for (p, a) in coeffs.iter().enumerate() {
                acc += a * self.twiddle((p0 + p as i64) * step);
            }
            *o = acc;
        }
    }
}

/// Complex samples on the interior and boundary nodes of a grid.
#[derive(Debug, Clone)]
pub struct ScalarField {
    grid: Arc<DiscGrid>,
    interior: Vec<C64>,
    boundary: Vec<C64>,
}

impl ScalarField {
    pub fn new(grid: Arc<DiscGrid>, interior: Vec<C64>, boundary: Vec<C64>) -> Result<Self> {
        if interior.len() != grid.n_interior() {
            return Err(Error::LengthMismatch {
                expected: grid.n_interior(),
                got: interior.len(),
            });
        }
        if boundary.len() != grid.n_boundary() {
            return Err(Error::LengthMismatch {
                expected: grid.n_boundary(),
                got: boundary.len(),
            });
        }
        Ok(Self {
            grid,
            interior,
            boundary,
        })
    }

    pub fn constant(grid: &Arc<DiscGrid>, c: C64) -> Self {
        Self {
            interior: vec![c; grid.n_interior()],
            boundary: vec![c; grid.n_boundary()],
            grid: grid.clone(),
        }
    }

    pub fn zeros(grid: &Arc<DiscGrid>) -> Self {
        Self::constant(grid, C64::new(0.0, 0.0))
    }

    pub fn grid(&self) -> &Arc<DiscGrid> {
        &self.grid
    }
    pub fn interior(&self) -> &[C64] {
        &self.interior
    }
    pub fn boundary(&self) -> &[C64] {
        &self.boundary
    }
    pub fn interior_mut(&mut self) -> &mut [C64] {
        &mut self.interior
    }
    pub fn boundary_mut(&mut self) -> &mut [C64] {
        &mut self.boundary
    }
    /// Interior values followed by boundary values.
    pub fn values(&self) -> impl Iterator<Item = C64> + '_ {
        self.interior.iter().chain(self.boundary.iter()).copied()
    }

    /// Value at position `k` of the [`ScalarField::values`] order.
    #[inline]
    pub fn at(&self, k: usize) -> C64 {
        let n = self.interior.len();
        if k < n {
            self.interior[k]
        } else {
            self.boundary[k - n]
        }
    }

    /// Applies `f` to every value, keeping the node layout.
    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        Self {
            grid: self.grid.clone(),
            interior: self.interior.iter().map(|&v| f(v)).collect(),
            boundary: self.boundary.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Applies `f(z, value)` at every node.
    pub fn map_with_z(&self, f: impl Fn(C64, C64) -> C64) -> Self {
        let g = &self.grid;
        Self {
            grid: g.clone(),
            interior: g
                .interior_nodes()
                .iter()
                .zip(&self.interior)
                .map(|(&z, &v)| f(z, v))
                .collect(),
            boundary: g
                .boundary_nodes()
                .iter()
                .zip(&self.boundary)
                .map(|(&z, &v)| f(z, v))
                .collect(),
        }
    }

    pub fn conj(&self) -> Self {
        self.map(|v| v.conj())
    }

    pub fn scale(&self, c: C64) -> Self {
        self.map(|v| v * c)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(C64, C64) -> C64) -> Result<Self> {
        if !self.grid.same_shape(&other.grid) {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            grid: self.grid.clone(),
            interior: self
                .interior
                .iter()
                .zip(&other.interior)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            boundary: self
                .boundary
                .iter()
                .zip(&other.boundary)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    /// Largest modulus over interior and boundary nodes.
    pub fn sup(&self) -> f64 {
        self.values().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest modulus over nodes with `|z| <= limit`.
    pub fn sup_within(&self, limit: f64) -> f64 {
        self.grid
            .all_nodes()
            .zip(self.values())
            .filter(|(z, _)| z.norm() <= limit)
            .map(|(_, v)| v.norm())
            .fold(0.0, f64::max)
    }

    /// CSV with header `re_z,im_z,re_v,im_v`; interior nodes first.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("re_z,im_z,re_v,im_v\n");
        for (z, v) in self.grid.all_nodes().zip(self.values()) {
            let _ = writeln!(
                s,
                "{},{},{},{}",
                fmt_f64(z.re),
                fmt_f64(z.im),
                fmt_f64(v.re),
                fmt_f64(v.im)
            );
        }
        s
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

/// Samples `f` at every node; non-finite values are reported with their node.
pub fn sample(grid: &Arc<DiscGrid>, f: impl Fn(C64) -> C64) -> Result<ScalarField> {
    try_sample(grid, |z| {
        let v = f(z);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("non-finite value {v}"))
        }
    })
}

/// Samples a fallible evaluator at every node.
pub fn try_sample(
    grid: &Arc<DiscGrid>,
    f: impl Fn(C64) -> std::result::Result<C64, String>,
) -> Result<ScalarField> {
    let eval = |z: C64| f(z).map_err(|reason| Error::Evaluator { z, reason });
    let interior = grid
        .interior_nodes()
        .iter()
        .map(|&z| eval(z))
        .collect::<Result<Vec<_>>>()?;
    let boundary = grid
        .boundary_nodes()
        .iter()
        .map(|&z| eval(z))
        .collect::<Result<Vec<_>>>()?;
    ScalarField::new(grid.clone(), interior, boundary)
}

/// Midpoint-rule area integral, summed in node order.
pub fn integrate(field: &ScalarField) -> C64 {
    field
        .interior
        .iter()
        .zip(field.grid.weights())
        .fold(C64::new(0.0, 0.0), |acc, (v, w)| acc + v * w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(matches!(
            DiscGrid::new(1.0, 2, 8),
            Err(Error::TooFewRadialCells(2))
        ));
        assert!(matches!(
            DiscGrid::new(1.0, 4, 6),
            Err(Error::TooFewAngularCells(6))
        ));
        assert!(matches!(
            DiscGrid::new(1.0, 4, 9),
            Err(Error::OddAngularCount(9))
        ));
        assert!(matches!(
            DiscGrid::new(0.0, 4, 8),
            Err(Error::InvalidRadius(_))
        ));
    }

    #[test]
    fn weights_sum_to_area() {
        let g = DiscGrid::new(1.0, 64, 128).unwrap();
        assert_eq!(g.n_interior(), 8192);
        let s: f64 = g.weights().iter().sum();
        assert!((s - PI).abs() <= 1e-12 * PI);
        let g = DiscGrid::new(0.5, 4, 8).unwrap();
        let s: f64 = g.weights().iter().sum();
        assert!((s - PI / 4.0).abs() <= 1e-12);
    }

    #[test]
    fn node_placement() {
        let g = DiscGrid::new(2.0, 8, 16).unwrap();
        assert!(g.interior_nodes().iter().all(|z| z.norm() < 2.0));
        assert!(g
            .boundary_nodes()
            .iter()
            .all(|z| (z.norm() - 2.0).abs() < 1e-12 * 2.0));
        assert_eq!(g.boundary_nodes()[0], C64::new(2.0, 0.0));
    }

    #[test]
    fn pole_on_boundary_is_reported() {
        let g = DiscGrid::new(1.0, 8, 16).unwrap();
        let err = sample(&g, |z| 1.0 / (1.0 - z)).unwrap_err();
        match err {
            Error::Evaluator { z, .. } => assert!((z - 1.0).norm() < 1e-12),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn ring_transform_round_trip() {
        let g = DiscGrid::new(1.0, 4, 16).unwrap();
        let vals: Vec<C64> = (0..16)
            .map(|j| C64::new((j as f64).sin(), (j * j) as f64 * 0.1))
            .collect();
        for half in [false, true] {
            let c = g.ring_coefficients(&vals, half);
            let mut back = vec![C64::new(0.0, 0.0); 16];
            g.synthesize(&c, -8, half, &mut back);
            for (a, b) in vals.iter().zip(&back) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn csv_layout() {
        let g = DiscGrid::new(1.0, 4, 8).unwrap();
        let f = ScalarField::constant(&g, C64::new(1.0, 0.0));
        let csv = f.to_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "re_z,im_z,re_v,im_v");
        assert_eq!(lines.len(), 1 + 32 + 8);
        assert!(lines[33].starts_with("1.0,0.0,"));
    }
}
