//! Self-checks of the operator identities and norm inequalities.
//!
//! Every check reports a measured number against a tolerance; `cgdisk verify`
//! prints them and exits nonzero if any fails.

use std::fmt::Write as _;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::fd::{central_wirtinger, derivative_jet};
use crate::grid::{fmt_f64, sample, DiscGrid, ScalarField};
use crate::holder::{factorial, jet_pairs, level_norm, norms, polynomial_jet, JetField};
use crate::ops::{apply_t, apply_t2, compose_green};
use crate::problems::{cp_coefficients, expand_brute_force, real_to_complex};
use crate::C64;

/// Factor applied to right-hand sides that contain a sampled `H_a`.
pub const HOLDER_SAFETY: f64 = 1.25;

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    fn at_most(suite: &'static str, name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Self {
            suite,
            name: name.into(),
            measured,
            tolerance,
            pass: measured.is_finite() && measured <= tolerance,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "[{}] {}: {} measured = {} tolerance = {}",
            if self.pass { "pass" } else { "FAIL" },
            self.suite,
            self.name,
            fmt_f64(self.measured),
            fmt_f64(self.tolerance)
        )
    }
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub radius: f64,
    pub n_r: usize,
    pub n_t: usize,
    pub seed: u64,
    /// Random fields for the derivative and bound checks.
    pub fields: usize,
    /// Random jets for the norm inequalities.
    pub jets: usize,
    pub alpha: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            radius: 1.0,
            n_r: 64,
            n_t: 128,
            seed: 11,
            fields: 20,
            jets: 50,
            alpha: 0.5,
        }
    }
}

/// Random `sum c_pq (z/R)^p (zbar/R)^q` with `p + q <= degree`.
pub fn random_polynomial(rng: &mut impl Rng, degree: usize, lowest: usize, radius: f64) -> Vec<(usize, usize, C64)> {
    let mut terms = Vec::new();
    for d in lowest..=degree {
        for q in 0..=d {
            let c = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) / radius.powi(d as i32);
            terms.push((d - q, q, c));
        }
    }
    terms
}

pub fn eval_polynomial(terms: &[(usize, usize, C64)], z: C64) -> C64 {
    terms.iter().map(|&(p, q, c)| c * z.powi(p as i32) * z.conj().powi(q as i32)).sum()
}

#[derive(Clone, Debug, Default)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn log(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let _ = writeln!(s, "{}", c.line());
        }
        let failed = self.checks.iter().filter(|c| !c.pass).count();
        let _ = writeln!(s, "checks = {} failed = {failed}", self.checks.len());
        s
    }
}

fn sup_diff(a: &ScalarField, b: &ScalarField) -> f64 {
    a.values().zip(b.values()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// `T(zbar^l) = zbar^(l+1) / (l+1)` for `l <= 3`, and `2T(zbar) = 0`.
pub fn cauchy_identities(grid: &Arc<DiscGrid>) -> Result<Vec<Check>> {
    let r = grid.radius();
    let mut out = Vec::new();
    for l in 0..=3i32 {
        let f = sample(grid, |z| z.conj().powi(l))?;
        let exact = sample(grid, |z| z.conj().powi(l + 1) / (l + 1) as f64)?;
        let err = sup_diff(&apply_t(&f), &exact);
        out.push(Check::at_most("operators", format!("T(conj z^{l})"), err, 1e-3 * r.powi(l + 1)));
    }
    let f = sample(grid, |z| z.conj())?;
    out.push(Check::at_most("operators", "2T(conj z) = 0", apply_t2(&f).sup(), 1e-3));
    Ok(out)
}

/// Largest `|dbar T f - f| / |f|` over `|z| <= 0.8 R` for random band-limited fields.
pub fn dbar_inverts_t(grid: &Arc<DiscGrid>, fields: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = grid.radius();
    let mut worst = 0.0f64;
    for _ in 0..fields {
        let terms = random_polynomial(&mut rng, 4, 0, r);
        let f = sample(grid, |z| eval_polynomial(&terms, z))?;
        let (_, db) = central_wirtinger(&apply_t(&f));
        let (mut num, mut den) = (0.0f64, 0.0f64);
        for (k, &z) in grid.interior_nodes().iter().enumerate() {
            if z.norm() <= 0.8 * r {
                num = num.max((db[k] - f.interior()[k]).norm());
                den = den.max(f.interior()[k].norm());
            }
        }
        worst = worst.max(num / den);
    }
    Ok(worst)
}

/// Largest `|T f| / (4 R |f|)` over random fields.
pub fn t_bound_ratio(grid: &Arc<DiscGrid>, fields: usize, seed: u64) -> Result<(f64, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = grid.radius();
    let mut worst = 0.0f64;
    let mut violations = 0;
    for k in 0..fields {
        let f = if k % 2 == 0 {
            let terms = random_polynomial(&mut rng, 5, 0, r);
            sample(grid, |z| eval_polynomial(&terms, z))?
        } else {
            let n = grid.n_interior() + grid.n_boundary();
            let vals: Vec<C64> = (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let (a, b) = vals.split_at(grid.n_interior());
            ScalarField::new(grid.clone(), a.to_vec(), b.to_vec())?
        };
        let q = apply_t(&f).sup() / (4.0 * r * f.sup());
        if q > 1.0 {
            violations += 1;
        }
        worst = worst.max(q);
    }
    Ok((worst, violations))
}

/// Every entry of `compose_green(nu, mu, h)` against discrete derivatives of
/// its `(0, 0)` entry on `|z| <= 0.9 R`, relative to the entry's sup; plus the
/// exactness of the `(mu, nu)` entry on every node.
///
/// Repeated one-sided differences next to the boundary amplify the
/// quadrature error of the `(0, 0)` entry by `O(h^-k)`, hence the margin.
pub fn word_engine(grid: &Arc<DiscGrid>, max_m: usize, seed: u64) -> Result<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = grid.radius();
    let (mut worst, mut exact) = (0.0f64, 0.0f64);
    for m in 1..=max_m {
        for nu in 0..=m {
            let mu = m - nu;
            let terms = random_polynomial(&mut rng, 2, 0, r);
            let h = sample(grid, |z| eval_polynomial(&terms, z))?;
            let jet = compose_green(nu, mu, &h)?;
            let fd = derivative_jet(jet.entry(0, 0, 0), m)?;
            for (i, j) in jet_pairs(m).skip(1) {
                let e = jet.entry(0, i, j);
                let scale = e.sup().max(h.sup());
                worst = worst.max(e.sub(fd.entry(0, i, j))?.sup_within(0.9 * r) / scale);
            }
            exact = exact.max(sup_diff(jet.entry(0, mu, nu), &h));
        }
    }
    Ok((worst, exact))
}

/// Ratios `lhs / rhs` of the norm inequalities over random polynomial jets.
#[derive(Clone, Debug, Default)]
pub struct NormRatios {
    pub product: f64,
    pub vanishing: f64,
    pub nesting: f64,
    pub z_norm: f64,
}

pub fn norm_inequalities(grid: &Arc<DiscGrid>, jets: usize, alpha: f64, seed: u64) -> Result<NormRatios> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = grid.radius();
    let mut out = NormRatios::default();
    let level = |jet: &JetField, k: usize| level_norm(jet, k, alpha).map(|n| n.composite);
    for s in 0..jets {
        let a = random_polynomial(&mut rng, 3, 0, r);
        let b = random_polynomial(&mut rng, 3, 0, r);
        let f = sample(grid, |z| eval_polynomial(&a, z))?;
        let g = sample(grid, |z| eval_polynomial(&b, z))?;
        let fg = norms(&f.mul(&g)?, alpha)?.composite;
        let q = fg / (norms(&f, alpha)?.composite * norms(&g, alpha)?.composite * HOLDER_SAFETY);
        out.product = out.product.max(q);

        let m = 1 + s % 4;
        let terms = random_polynomial(&mut rng, m + 2, m, r);
        let jet = polynomial_jet(grid, m, &terms);
        let top = level(&jet, m)?;
        for l in 0..m {
            let c = 6f64.powi((m - l) as i32) / factorial(m - l) * r.powi((m - l) as i32);
            let q = level(&jet, l)? / (c * top * HOLDER_SAFETY);
            if l == 0 {
                out.vanishing = out.vanishing.max(q);
            }
            out.nesting = out.nesting.max(q);
        }
    }
    let z = sample(grid, |z| z)?;
    out.z_norm = norms(&z, alpha)?.composite / (3.0 * r);
    Ok(out)
}

/// Closed-form operator coefficients against brute-force expansion for `mu + nu <= 6`, and
/// `cp_coefficients` against a direct sum of `real_to_complex`.
pub fn coefficient_oracle(seed: u64) -> (usize, f64) {
    let mut mismatches = 0;
    for m in 0..=6 {
        for nu in 0..=m {
            if real_to_complex(m - nu, nu).coeffs != expand_brute_force(m - nu, nu) {
                mismatches += 1;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let m = rng.gen_range(1..=4usize);
        let a: Vec<C64> = (0..=m).map(|_| C64::new(rng.gen_range(-5..=5) as f64, 0.0)).collect();
        let cp = cp_coefficients(&a);
        for p in 0..=m {
            let direct: C64 = (0..=m)
                .map(|k| a[k] * real_to_complex(k, m - k).complex()[p])
                .sum();
            worst = worst.max((direct - cp.values[p]).norm());
        }
    }
    (mismatches, worst)
}

/// Runs every suite.
pub fn run(opts: &VerifyOptions) -> Result<VerifyReport> {
    let grid = DiscGrid::new(opts.radius, opts.n_r, opts.n_t)?;
    let r = opts.radius;
    let mut checks = cauchy_identities(&grid)?;
    let d = dbar_inverts_t(&grid, opts.fields, opts.seed)?;
    checks.push(Check::at_most("operators", "dbar T f = f (relative, |z| <= 0.8R)", d, 1e-2));
    let (q, _) = t_bound_ratio(&grid, opts.fields, opts.seed + 1)?;
    checks.push(Check::at_most("operators", "|T f| / (4R |f|)", q, 1.0));
    let small = DiscGrid::new(r, opts.n_r / 2, opts.n_t / 2)?;
    let (w, e) = word_engine(&small, 3, opts.seed + 2)?;
    checks.push(Check::at_most("operators", "compose_green entries vs differences (relative, |z| <= 0.9R)", w, 1e-2));
    checks.push(Check::at_most("operators", "compose_green (mu, nu) entry = h", e, 0.0));

    let n = norm_inequalities(&small, opts.jets, opts.alpha, opts.seed + 3)?;
    checks.push(Check::at_most("norms", "||fg|| / (1.25 ||f|| ||g||)", n.product, 1.0));
    checks.push(Check::at_most("norms", "||f|| / (1.25 (6^k/k!) R^k ||f||^(k))", n.vanishing, 1.0));
    checks.push(Check::at_most("norms", "||f||^(l) / (1.25 (6^(m-l)/(m-l)!) R^(m-l) ||f||^(m))", n.nesting, 1.0));
    let mut zc = Check::at_most("norms", "1 - ||z|| / 3R", 1.0 - n.z_norm, 0.02);
    zc.pass &= n.z_norm <= 1.0;
    checks.push(zc);

    let (mismatch, cp) = coefficient_oracle(opts.seed + 4);
    checks.push(Check::at_most("coefficients", "real_to_complex vs expansion (mismatches)", mismatch as f64, 0.0));
    checks.push(Check::at_most("coefficients", "cp_coefficients vs direct sum", cp, 0.0));
    let lap = cp_coefficients(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)]);
    let lap_err = (lap.values[1] - 4.0).norm() + lap.values[0].norm() + lap.values[2].norm();
    checks.push(Check::at_most("coefficients", "Laplacian gives (0, 4, 0)", lap_err, 0.0));
    Ok(VerifyReport { checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_run_passes() {
        let rep = run(&VerifyOptions {
            fields: 2,
            jets: 4,
            ..VerifyOptions::default()
        })
        .unwrap();
        assert!(rep.passed(), "{}", rep.log());
    }
}
