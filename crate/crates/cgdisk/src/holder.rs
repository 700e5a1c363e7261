//! Discrete Hölder norms and derivative jets.
//!
//! `|f|` is the node supremum, `H_a[f]` the largest difference quotient
//! `|f(z) - f(z')| / |z - z'|^a` over the grid's pair list, and
//! `||f|| = |f| + (2R)^a H_a[f]`. The level norm `||f||^(k)` is the largest
//! composite norm among the entries `d^i dbar^j f`, `i + j = k`.
//!
//! Jet entries are stored once per distinct `(i, j)`.

use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{fmt_f64, DiscGrid, ScalarField};
use crate::C64;

/// Number of distinct entries `(i, j)` with `i + j <= m`.
pub const fn jet_len(m: usize) -> usize {
    (m + 1) * (m + 2) / 2
}

/// Position of `(i, j)` in level-major order.
#[inline]
pub const fn jet_index(i: usize, j: usize) -> usize {
    let l = i + j;
    l * (l + 1) / 2 + j
}

/// `(i, j)` pairs in storage order.
pub fn jet_pairs(m: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..=m).flat_map(|l| (0..=l).map(move |j| (l - j, j)))
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

pub fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidAlpha(alpha))
    }
}

/// Sup, Hölder and composite norms of a field, plus per-level values for jets.
#[derive(Clone, Debug, PartialEq)]
pub struct NormReport {
    pub alpha: f64,
    pub radius: f64,
    pub sup_norm: f64,
    pub holder: f64,
    pub composite: f64,
    /// `||.||^(l)` for `l = 0..=depth`; a single entry for plain fields.
    pub levels: Vec<f64>,
    /// False when the level norm is only a seminorm (no vanishing order).
    pub is_norm: bool,
}

impl NormReport {
    /// Flat `key = value` lines with a common prefix.
    pub fn to_kv(&self, prefix: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{prefix}alpha = {}", fmt_f64(self.alpha));
        let _ = writeln!(s, "{prefix}sup_norm = {}", fmt_f64(self.sup_norm));
        let _ = writeln!(s, "{prefix}holder_seminorm = {}", fmt_f64(self.holder));
        let _ = writeln!(s, "{prefix}composite_norm = {}", fmt_f64(self.composite));
        for (l, v) in self.levels.iter().enumerate() {
            let _ = writeln!(s, "{prefix}level_{l} = {}", fmt_f64(*v));
        }
        let kind = if self.is_norm { "norm" } else { "seminorm" };
        let _ = writeln!(s, "{prefix}level_kind = {kind}");
        s
    }
}

/// Largest sampled quotient `|f(z) - f(z')| / |z - z'|^alpha`; `alpha = 1`
/// gives the sampled Lipschitz constant.
pub fn holder_quotient(field: &ScalarField, alpha: f64) -> f64 {
    let grid = field.grid();
    let pts: Vec<C64> = grid.all_nodes().collect();
    let vals: Vec<C64> = field.values().collect();
    grid.holder_pairs()
        .par_chunks(4096)
        .map(|chunk| {
            chunk.iter().fold(0.0f64, |acc, &(a, b)| {
                let (a, b) = (a as usize, b as usize);
                let d = (pts[a] - pts[b]).norm();
                let q = (vals[a] - vals[b]).norm() / if alpha == 1.0 { d } else { d.powf(alpha) };
                acc.max(q)
            })
        })
        .reduce(|| 0.0, f64::max)
}

/// Level-0 norms of a field.
pub fn norms(field: &ScalarField, alpha: f64) -> Result<NormReport> {
    check_alpha(alpha)?;
    let r = field.grid().radius();
    let sup_norm = field.sup();
    let holder = holder_quotient(field, alpha);
    let composite = sup_norm + (2.0 * r).powf(alpha) * holder;
    Ok(NormReport {
        alpha,
        radius: r,
        sup_norm,
        holder,
        composite,
        levels: vec![composite],
        is_norm: true,
    })
}

/// `||f||^(k)` over all components.
pub fn level_norm(jet: &JetField, k: usize, alpha: f64) -> Result<NormReport> {
    check_alpha(alpha)?;
    if k > jet.depth {
        return Err(Error::LevelExceedsDepth {
            level: k,
            depth: jet.depth,
        });
    }
    let mut best: Option<NormReport> = None;
    for c in 0..jet.n {
        for j in 0..=k {
            let r = norms(jet.entry(c, k - j, j), alpha)?;
            if best.as_ref().map_or(true, |b| r.composite > b.composite) {
                best = Some(r);
            }
        }
    }
    let mut best = best.expect("at least one entry");
    best.is_norm = jet.vanishing_order && k == jet.depth;
    Ok(best)
}

/// Level-`depth` report with every lower level filled in.
pub fn jet_norms(jet: &JetField, alpha: f64) -> Result<NormReport> {
    let levels = (0..=jet.depth)
        .map(|k| level_norm(jet, k, alpha).map(|r| r.composite))
        .collect::<Result<Vec<_>>>()?;
    let mut top = level_norm(jet, jet.depth, alpha)?;
    top.levels = levels;
    Ok(top)
}

/// Value at the origin from the two innermost ring means,
/// `(9 m_0 - m_1) / 8`, which cancels the `|z|^2` term of the mean.
pub fn origin_value(field: &ScalarField) -> C64 {
    let n_t = field.grid().n_t();
    let v = field.interior();
    let inv = 1.0 / n_t as f64;
    let m0: C64 = v[..n_t].iter().sum::<C64>() * inv;
    let m1: C64 = v[n_t..2 * n_t].iter().sum::<C64>() * inv;
    (m0 * 9.0 - m1) / 8.0
}

/// `n` complex components, each with every entry `d^i dbar^j`, `i + j <= depth`.
#[derive(Clone, Debug)]
pub struct JetField {
    grid: Arc<DiscGrid>,
    depth: usize,
    n: usize,
    // component-major, then jet_index
    entries: Vec<ScalarField>,
    pub real_valued: bool,
    pub holomorphic: bool,
    pub vanishing_order: bool,
}

impl JetField {
    pub fn from_entries(
        grid: Arc<DiscGrid>,
        depth: usize,
        n: usize,
        entries: Vec<ScalarField>,
    ) -> Result<Self> {
        let expected = n * jet_len(depth);
        if entries.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                got: entries.len(),
            });
        }
        if entries.iter().any(|e| !e.grid().same_shape(&grid)) {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            grid,
            depth,
            n,
            entries,
            real_valued: false,
            holomorphic: false,
            vanishing_order: false,
        })
    }

    pub fn zeros(grid: &Arc<DiscGrid>, depth: usize, n: usize) -> Self {
        Self {
            grid: grid.clone(),
            depth,
            n,
            entries: vec![ScalarField::zeros(grid); n * jet_len(depth)],
            real_valued: false,
            holomorphic: false,
            vanishing_order: false,
        }
    }

    /// Stacks single- or multi-component jets of equal depth.
    pub fn from_components(parts: Vec<JetField>) -> Result<Self> {
        let first = parts
            .first()
            .ok_or(Error::LengthMismatch { expected: 1, got: 0 })?;
        let (grid, depth) = (first.grid.clone(), first.depth);
        let mut n = 0;
        let mut entries = Vec::new();
        let mut flags = (true, true, true);
        for p in parts {
            if p.depth != depth {
                return Err(Error::LevelExceedsDepth {
                    level: p.depth,
                    depth,
                });
            }
            flags.0 &= p.real_valued;
            flags.1 &= p.holomorphic;
            flags.2 &= p.vanishing_order;
            n += p.n;
            entries.extend(p.entries);
        }
        let mut out = Self::from_entries(grid, depth, n, entries)?;
        (out.real_valued, out.holomorphic, out.vanishing_order) = flags;
        Ok(out)
    }

    pub fn component(&self, c: usize) -> JetField {
        let e = jet_len(self.depth);
        JetField {
            grid: self.grid.clone(),
            depth: self.depth,
            n: 1,
            entries: self.entries[c * e..(c + 1) * e].to_vec(),
            real_valued: self.real_valued,
            holomorphic: self.holomorphic,
            vanishing_order: self.vanishing_order,
        }
    }

    pub fn grid(&self) -> &Arc<DiscGrid> {
        &self.grid
    }
    pub fn depth(&self) -> usize {
        self.depth
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn entries(&self) -> &[ScalarField] {
        &self.entries
    }

    /// `d^i dbar^j` of component `c`.
    pub fn entry(&self, c: usize, i: usize, j: usize) -> &ScalarField {
        assert!(c < self.n && i + j <= self.depth, "jet entry out of range");
        &self.entries[c * jet_len(self.depth) + jet_index(i, j)]
    }

    pub fn entry_mut(&mut self, c: usize, i: usize, j: usize) -> &mut ScalarField {
        assert!(c < self.n && i + j <= self.depth, "jet entry out of range");
        &mut self.entries[c * jet_len(self.depth) + jet_index(i, j)]
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&ScalarField, &ScalarField) -> Result<ScalarField>) -> Result<Self> {
        if self.depth != other.depth || self.n != other.n {
            return Err(Error::LengthMismatch {
                expected: self.entries.len(),
                got: other.entries.len(),
            });
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| f(a, b))
            .collect::<Result<Vec<_>>>()?;
        Self::from_entries(self.grid.clone(), self.depth, self.n, entries)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a.add(b))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a.sub(b))
    }

    /// Writes the jet at node `k` (all-nodes order) as `out[c * E + jet_index]`.
    #[inline]
    pub fn gather(&self, k: usize, out: &mut [C64]) {
        for (o, e) in out.iter_mut().zip(&self.entries) {
            *o = e.at(k);
        }
    }

    /// Origin values of every entry, laid out like [`JetField::gather`].
    pub fn origin_jet(&self) -> Vec<C64> {
        self.entries.iter().map(origin_value).collect()
    }

    /// Largest `|e(i,j) - conj e(j,i)|` over entries and nodes.
    pub fn real_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for c in 0..self.n {
            for (i, j) in jet_pairs(self.depth) {
                let (a, b) = (self.entry(c, i, j), self.entry(c, j, i));
                for (x, y) in a.values().zip(b.values()) {
                    worst = worst.max((x - y.conj()).norm());
                }
            }
        }
        worst
    }

    /// Largest sup norm among entries with `j >= 1`.
    pub fn holomorphic_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for c in 0..self.n {
            for (i, j) in jet_pairs(self.depth).filter(|&(_, j)| j >= 1) {
                worst = worst.max(self.entry(c, i, j).sup());
            }
        }
        worst
    }

    /// Largest origin value among entries below the top level.
    pub fn vanishing_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for c in 0..self.n {
            for (i, j) in jet_pairs(self.depth).filter(|&(i, j)| i + j < self.depth) {
                worst = worst.max(origin_value(self.entry(c, i, j)).norm());
            }
        }
        worst
    }

    /// Replaces `e(i,j)` by `(e(i,j) + conj e(j,i)) / 2`.
    pub fn symmetrize_real(&mut self) {
        let old = self.entries.clone();
        let e = jet_len(self.depth);
        for c in 0..self.n {
            for (i, j) in jet_pairs(self.depth) {
                let a = &old[c * e + jet_index(i, j)];
                let b = &old[c * e + jet_index(j, i)];
                let mut out = a.clone();
                for (o, (x, y)) in out.interior_mut().iter_mut().zip(a.interior().iter().zip(b.interior())) {
                    *o = (x + y.conj()) * 0.5;
                }
                for (o, (x, y)) in out.boundary_mut().iter_mut().zip(a.boundary().iter().zip(b.boundary())) {
                    *o = (x + y.conj()) * 0.5;
                }
                self.entries[c * e + jet_index(i, j)] = out;
            }
        }
        self.real_valued = true;
    }

    /// Zeroes every entry with `j >= 1` and returns the largest removed value.
    pub fn project_holomorphic(&mut self) -> f64 {
        let defect = self.holomorphic_defect();
        let e = jet_len(self.depth);
        for c in 0..self.n {
            for (i, j) in jet_pairs(self.depth).filter(|&(_, j)| j >= 1) {
                self.entries[c * e + jet_index(i, j)] = ScalarField::zeros(&self.grid);
            }
        }
        self.holomorphic = true;
        defect
    }
}

/// Jet of `sum c z^k zbar^l` over `terms = [(k, l, c)]`, exact at every node.
pub fn polynomial_jet(grid: &Arc<DiscGrid>, depth: usize, terms: &[(usize, usize, C64)]) -> JetField {
    let mut entries = Vec::with_capacity(jet_len(depth));
    for (a, b) in jet_pairs(depth) {
        let active: Vec<(i32, i32, C64)> = terms
            .iter()
            .filter(|&&(k, l, _)| k >= a && l >= b)
            .map(|&(k, l, c)| {
                let coef = c * (factorial(k) / factorial(k - a) * factorial(l) / factorial(l - b));
                ((k - a) as i32, (l - b) as i32, coef)
            })
            .collect();
        let f = |z: C64| {
            active
                .iter()
                .map(|&(p, q, c)| c * z.powi(p) * z.conj().powi(q))
                .sum::<C64>()
        };
        let interior = grid.interior_nodes().iter().map(|&z| f(z)).collect();
        let boundary = grid.boundary_nodes().iter().map(|&z| f(z)).collect();
        entries.push(ScalarField::new(grid.clone(), interior, boundary).expect("grid-shaped"));
    }
    JetField::from_entries(grid.clone(), depth, 1, entries).expect("single component")
}

/// Removes the Taylor polynomial of degree `m = depth` at the origin except
/// its `z^mu zbar^nu` term, from every entry consistently.
///
/// The `(mu, nu)` entry is left untouched.
pub fn taylor_subtract(jet: &JetField, mu: usize, nu: usize) -> Result<JetField> {
    let m = jet.depth;
    if mu + nu != m {
        return Err(Error::OrderTooHigh { k: mu, l: nu, m });
    }
    let mut parts = Vec::with_capacity(jet.n);
    for c in 0..jet.n {
        let comp = jet.component(c);
        let terms: Vec<(usize, usize, C64)> = jet_pairs(m)
            .filter(|&(k, l)| (k, l) != (mu, nu))
            .map(|(k, l)| {
                let v = origin_value(comp.entry(0, k, l));
                (k, l, v / (factorial(k) * factorial(l)))
            })
            .filter(|t| t.2 != C64::new(0.0, 0.0))
            .collect();
        let poly = polynomial_jet(&jet.grid, m, &terms);
        let mut entries = Vec::with_capacity(jet_len(m));
        for (a, b) in jet_pairs(m) {
            let touched = terms.iter().any(|&(k, l, _)| k >= a && l >= b);
            let e = comp.entry(0, a, b);
            entries.push(if touched { e.sub(poly.entry(0, a, b))? } else { e.clone() });
        }
        let mut out = JetField::from_entries(jet.grid.clone(), m, 1, entries)?;
        out.real_valued = jet.real_valued;
        out.holomorphic = jet.holomorphic;
        out.vanishing_order = true;
        parts.push(out);
    }
    JetField::from_components(parts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::sample;

    #[test]
    fn jet_indexing() {
        let pairs: Vec<_> = jet_pairs(2).collect();
        assert_eq!(pairs, vec![(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]);
        for (k, (i, j)) in jet_pairs(4).enumerate() {
            assert_eq!(jet_index(i, j), k);
        }
        assert_eq!(jet_len(4), 15);
    }

    #[test]
    fn norms_of_constant() {
        let g = DiscGrid::new(1.0, 8, 16).unwrap();
        let r = norms(&ScalarField::constant(&g, C64::new(1.0, 0.0)), 0.3).unwrap();
        assert_eq!((r.sup_norm, r.holder, r.composite), (1.0, 0.0, 1.0));
        assert!(matches!(norms(&ScalarField::zeros(&g), 1.0), Err(Error::InvalidAlpha(_))));
    }

    #[test]
    fn holder_of_identity_at_half() {
        let g = DiscGrid::new(1.0, 32, 64).unwrap();
        let z = sample(&g, |z| z).unwrap();
        let r = norms(&z, 0.5).unwrap();
        let exact = 2f64.sqrt();
        assert!(r.holder <= exact * (1.0 + 1e-12) && r.holder >= 0.98 * exact);
        assert_eq!(r.composite, r.sup_norm + 2f64.powf(0.5) * r.holder);
    }

    #[test]
    fn origin_value_is_fourth_order() {
        let g = DiscGrid::new(1.0, 32, 64).unwrap();
        let f = sample(&g, |z| (z * 0.7).exp() + z * z.conj() * 3.0).unwrap();
        assert!((origin_value(&f) - 1.0).norm() < 1e-6);
    }

    #[test]
    fn taylor_subtract_of_constant_is_zero() {
        let g = DiscGrid::new(0.5, 8, 16).unwrap();
        let jet = polynomial_jet(&g, 1, &[(0, 0, C64::new(2.0, 1.0))]);
        let out = taylor_subtract(&jet, 0, 1).unwrap();
        for e in out.entries() {
            assert!(e.sup() < 1e-15);
        }
        assert!(out.vanishing_order);
    }

    #[test]
    fn taylor_subtract_keeps_the_defining_monomial() {
        let g = DiscGrid::new(0.5, 8, 16).unwrap();
        let jet = polynomial_jet(&g, 2, &[(1, 1, C64::new(1.0, 0.0)), (2, 0, C64::new(0.5, 0.0))]);
        let out = taylor_subtract(&jet, 1, 1).unwrap();
        let keep = polynomial_jet(&g, 2, &[(1, 1, C64::new(1.0, 0.0))]);
        for (a, b) in out.entries().iter().zip(keep.entries()) {
            assert!(a.sub(b).unwrap().sup() < 1e-14);
        }
        assert!(out.entry(0, 1, 1).values().zip(jet.entry(0, 1, 1).values()).all(|(x, y)| x == y));
    }
}
