//! Contraction constants for the Picard map on `A(R, gamma)`.
//!
//! `C0 = 12 / (a (1 - a))`, `C1 = 2^(a+1) / a`, `C2 = 4 / (a (1 - a))`, the
//! operator gain `M = 2^(m(m-1)/2) (C1 m + C0 + (m-1) C2 R^a)^m`, envelopes of
//! the partials of `a` over the box
//! `E(R, gamma) = D x prod_k {|eta_k| <= 6^m R^(m-k) gamma} x {|eta_m| <= gamma}`,
//! and the ledger `delta_1 .. delta_5`, `delta`, `eta`.
//!
//! The `O(R^a)` remainders are not split off: `delta = (M + 2^m M_row) delta_1`
//! and `eta = (M + 2^m M_row)(|a(0)| + delta_5)` with
//! `M_row = C1 m + C0 + (m-1) C2 R^a`.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::fmt_f64;
use crate::holder::{check_alpha, factorial, jet_len};
use crate::system::{level_of, Partials, RhsSystem};
use crate::C64;

/// `(C0, C1, C2)`.
pub fn base_constants(alpha: f64) -> Result<(f64, f64, f64)> {
    check_alpha(alpha)?;
    let c0 = 12.0 / (alpha * (1.0 - alpha));
    let c1 = 2f64.powf(alpha + 1.0) / alpha;
    let c2 = 4.0 / (alpha * (1.0 - alpha));
    Ok((c0, c1, c2))
}

/// `C1 m + C0 + (m-1) C2 R^alpha`.
pub fn row_gain(m: usize, alpha: f64, r: f64) -> Result<f64> {
    let (c0, c1, c2) = base_constants(alpha)?;
    Ok(c1 * m as f64 + c0 + (m as f64 - 1.0) * c2 * r.powf(alpha))
}

/// `M = 2^(m(m-1)/2) (C1 m + C0 + (m-1) C2 R^alpha)^m`.
pub fn operator_gain(m: usize, alpha: f64, r: f64) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidSystem("operator gain needs m >= 1".into()));
    }
    let row = row_gain(m, alpha, r)?;
    Ok(2f64.powf((m * (m - 1)) as f64 / 2.0) * row.powi(m as i32))
}

#[derive(Clone, Debug)]
pub struct EnvelopeOptions {
    pub samples: usize,
    pub safety: f64,
    pub seed: u64,
    /// Finite-difference step as a fraction of each box radius.
    pub fd_step: f64,
}

impl Default for EnvelopeOptions {
    fn default() -> Self {
        Self {
            samples: 4096,
            safety: 1.25,
            seed: 7,
            fd_step: 1e-5,
        }
    }
}

/// Sample points of `E(R, gamma)` for one system.
#[derive(Clone, Debug)]
pub struct EnvelopeSet {
    pub r: f64,
    pub gamma: f64,
    pub m: usize,
    pub n: usize,
    /// Box radius per jet level `0..=m`.
    pub radii: Vec<f64>,
    pub points: Vec<(C64, Vec<C64>)>,
}

fn unit_disk_sample(rng: &mut ChaCha8Rng, t: f64) -> C64 {
    C64::from_polar(t.sqrt(), rng.gen_range(0.0..std::f64::consts::TAU))
}

impl EnvelopeSet {
    /// Latin-stratified samples of the box: sample 0 is the origin, every
    /// eighth sample puts every coordinate on its face, every eighth (offset
    /// by one) puts a single random coordinate on its face.
    pub fn new(system: &RhsSystem, r: f64, gamma: f64, opts: &EnvelopeOptions) -> Result<Self> {
        let m = system.m;
        let six_m = 6f64.powi(m as i32);
        let radii: Vec<f64> = (0..=m)
            .map(|k| if k == m { gamma } else { six_m * r.powi((m - k) as i32) * gamma })
            .collect();
        if r > system.disk_radius {
            return Err(Error::OutsideDomain(format!(
                "disk radius {r} exceeds the system's {}",
                system.disk_radius
            )));
        }
        if radii[0] > system.eta0_radius {
            return Err(Error::OutsideDomain(format!(
                "eta_0 box radius {} exceeds R' = {}",
                radii[0], system.eta0_radius
            )));
        }
        if gamma > system.etam_radius {
            return Err(Error::OutsideDomain(format!(
                "eta_m box radius {gamma} exceeds gamma' = {}",
                system.etam_radius
            )));
        }
        let w = system.jet_width();
        let e = jet_len(m);
        let count = opts.samples.max(2);
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        // one stratum permutation per coordinate (z first)
        let strata: Vec<Vec<usize>> = (0..=w)
            .map(|_| {
                let mut p: Vec<usize> = (0..count).collect();
                for i in (1..count).rev() {
                    p.swap(i, rng.gen_range(0..=i));
                }
                p
            })
            .collect();
        let mut points = Vec::with_capacity(count);
        for s in 0..count {
            let coord = |k: usize, rng: &mut ChaCha8Rng| {
                let t = (strata[k][s] as f64 + rng.gen_range(0.0..1.0)) / count as f64;
                unit_disk_sample(rng, t)
            };
            let mut z = coord(0, &mut rng) * r;
            let mut jet: Vec<C64> = (0..w)
                .map(|k| coord(k + 1, &mut rng) * radii[level_of(k % e)])
                .collect();
            match s % 8 {
                _ if s == 0 => {
                    z = C64::new(0.0, 0.0);
                    jet.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
                }
                1 => {
                    z = C64::from_polar(r, rng.gen_range(0.0..std::f64::consts::TAU));
                    for (k, v) in jet.iter_mut().enumerate() {
                        *v = C64::from_polar(radii[level_of(k % e)], rng.gen_range(0.0..std::f64::consts::TAU));
                    }
                }
                2 => {
                    let k = rng.gen_range(0..=w);
                    if k == w {
                        z = C64::from_polar(r, z.arg());
                    } else {
                        jet[k] = C64::from_polar(radii[level_of(k % e)], jet[k].arg());
                    }
                }
                _ => {}
            }
            points.push((z, jet));
        }
        Ok(Self {
            r,
            gamma,
            m,
            n: system.n,
            radii,
            points,
        })
    }
}

/// Envelope values, already multiplied by the safety factor.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Envelopes {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub h_alpha_a: f64,
    pub h_alpha_b: f64,
    pub h_alpha_c: f64,
    pub h1_a: f64,
    pub h1_b: f64,
    pub h1_c: f64,
}

impl Envelopes {
    fn scaled(mut self, s: f64) -> Self {
        for v in [
            &mut self.a,
            &mut self.b,
            &mut self.c,
            &mut self.h_alpha_a,
            &mut self.h_alpha_b,
            &mut self.h_alpha_c,
            &mut self.h1_a,
            &mut self.h1_b,
            &mut self.h1_c,
        ] {
            *v *= s;
        }
        self
    }
}

// partial magnitudes split into the A (levels < m), B (level m) and C (z) groups
struct Grouped {
    a: Vec<C64>,
    b: Vec<C64>,
    c: Vec<C64>,
}

fn grouped_partials(system: &RhsSystem, z: C64, jet: &[C64], steps: &Partials) -> Grouped {
    let p = system.partials(z, jet, steps.clone());
    let w = system.jet_width();
    let e = jet_len(system.m);
    let mut g = Grouped {
        a: Vec::new(),
        b: Vec::new(),
        c: Vec::new(),
    };
    for c in 0..system.n {
        g.c.push(p.dz[c]);
        g.c.push(p.dzbar[c]);
        for k in 0..w {
            let dst = if level_of(k % e) == system.m { &mut g.b } else { &mut g.a };
            if level_of(k % e) == system.m && system.eta_m_free {
                continue;
            }
            dst.push(p.deta[c * w + k]);
            dst.push(p.detabar[c * w + k]);
        }
    }
    g
}

fn max_abs(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

fn max_quotient(x: &[C64], y: &[C64], d: f64) -> f64 {
    if d == 0.0 {
        return 0.0;
    }
    x.iter().zip(y).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / d
}

fn distance(p: &(C64, Vec<C64>), q: &(C64, Vec<C64>)) -> f64 {
    let mut s = (p.0 - q.0).norm_sqr();
    for (a, b) in p.1.iter().zip(&q.1) {
        s += (a - b).norm_sqr();
    }
    s.sqrt()
}

/// `A, B, C` and their Hölder / Lipschitz envelopes over the sampled box.
///
/// Hölder and Lipschitz quotients use consecutive sample pairs and pairs of
/// each sample with a small perturbation of itself.
pub fn envelope_bounds(
    system: &RhsSystem,
    env: &EnvelopeSet,
    alpha: f64,
    opts: &EnvelopeOptions,
) -> Result<Envelopes> {
    check_alpha(alpha)?;
    let steps = Partials {
        z: opts.fd_step * env.r,
        eta: env.radii.iter().map(|r| opts.fd_step * r).collect(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x9e37_79b9);
    let e = jet_len(env.m);
    // perturbations at 1% of each radius
    let perturbed: Vec<(C64, Vec<C64>)> = env
        .points
        .iter()
        .map(|(z, jet)| {
            let t = rng.gen_range(0.0..1.0);
            let dz = unit_disk_sample(&mut rng, t) * (0.01 * env.r);
            let jet2 = jet
                .iter()
                .enumerate()
                .map(|(k, v)| v + unit_disk_sample(&mut rng, 0.5) * (0.01 * env.radii[level_of(k % e)]))
                .collect();
            (z + dz, jet2)
        })
        .collect();
    let base: Vec<Grouped> = env
        .points
        .par_iter()
        .map(|(z, j)| grouped_partials(system, *z, j, &steps))
        .collect();
    let pert: Vec<Grouped> = perturbed
        .par_iter()
        .map(|(z, j)| grouped_partials(system, *z, j, &steps))
        .collect();
    let mut out = Envelopes::default();
    for g in &base {
        out.a = out.a.max(max_abs(&g.a));
        out.b = out.b.max(max_abs(&g.b));
        out.c = out.c.max(max_abs(&g.c));
    }
    let mut pairs: Vec<(&Grouped, &Grouped, f64)> = Vec::new();
    for s in 0..base.len() {
        pairs.push((&base[s], &pert[s], distance(&env.points[s], &perturbed[s])));
        if s + 1 < base.len() {
            pairs.push((&base[s], &base[s + 1], distance(&env.points[s], &env.points[s + 1])));
        }
    }
    for (x, y, d) in pairs {
        let da = d.powf(alpha);
        out.h_alpha_a = out.h_alpha_a.max(max_quotient(&x.a, &y.a, da));
        out.h_alpha_b = out.h_alpha_b.max(max_quotient(&x.b, &y.b, da));
        out.h_alpha_c = out.h_alpha_c.max(max_quotient(&x.c, &y.c, da));
        out.h1_a = out.h1_a.max(max_quotient(&x.a, &y.a, d));
        out.h1_b = out.h1_b.max(max_quotient(&x.b, &y.b, d));
        out.h1_c = out.h1_c.max(max_quotient(&x.c, &y.c, d));
    }
    Ok(out.scaled(opts.safety))
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Ledger {
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
    pub delta4: f64,
    pub delta5: f64,
    pub delta: f64,
    pub eta: f64,
    pub gain: f64,
    pub row: f64,
}

/// `delta_1 .. delta_5`, `delta` and `eta` from the envelopes and `|a(0)|`.
pub fn delta_eta_ledger(
    m: usize,
    alpha: f64,
    r: f64,
    gamma: f64,
    env: &Envelopes,
    a0: f64,
) -> Result<Ledger> {
    let (c0, c1, _) = base_constants(alpha)?;
    let gain = operator_gain(m, alpha, r)?;
    let row = row_gain(m, alpha, r)?;
    let mf = m as f64;
    let two_m = 2f64.powi(m as i32);
    let lead = 2f64.powf((m * (m - 1)) as f64 / 2.0) * (c1 * mf + c0).powi(m as i32);
    let ra = (2.0 * r).powf(alpha);
    let twelve_m = 12f64.powi(m as i32);
    let tail: f64 = (0..m)
        .map(|l| 2f64.powi(l as i32) * (twelve_m * r.powi((m - l - 1) as i32) * gamma).powf(alpha))
        .sum();
    let s1 = 1.0 + tail;
    let s2 = 1.0 + 2.0 * tail;
    let inner_a = env.a + gamma * 2.0 * two_m * env.h1_a + ra * env.h_alpha_a * s2;
    let mut delta2: f64 = (0..m)
        .map(|p| {
            6f64.powi((m - p) as i32) * 2f64.powi(p as i32 + 1) / factorial(m - p)
                * r.powi((m - p) as i32)
                * inner_a
        })
        .sum();
    delta2 += ra * env.h_alpha_b * s2;
    let beta = env.b + gamma * 2.0 * two_m * env.h1_b;
    let delta1 = beta + delta2;
    let delta3 = gain * delta1 - lead * beta;
    let delta4 = two_m * row * delta1 - mf * two_m * c1 * beta;
    let delta5 = 6.0 * r * (env.c + ra * env.h_alpha_c * s1 + gamma * two_m * env.h1_c) + gamma * delta1;
    let total = gain + two_m * row;
    Ok(Ledger {
        delta1,
        delta2,
        delta3,
        delta4,
        delta5,
        delta: total * delta1,
        eta: total * (a0 + delta5),
        gain,
        row,
    })
}

/// User thresholds standing in for the implicit constants of the smallness
/// conditions.
#[derive(Clone, Debug)]
pub struct Thresholds {
    pub epsilon: f64,
    pub delta: f64,
    pub tau: f64,
    /// Zero test for the exact vanishing conditions.
    pub zero: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            epsilon: 1e-3,
            delta: 1e-3,
            tau: 1e-3,
            zero: 1e-9,
        }
    }
}

/// Origin quantities and hypothesis flags.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionReport {
    pub a0: f64,
    /// `max |d_{eta_m} a(0)|`.
    pub d_eta_m: f64,
    /// `max |dbar_{eta_m} a(0)|`.
    pub dbar_eta_m: f64,
    /// Second derivatives in `eta_m` at the origin.
    pub kappa: f64,
    /// `max` over all first partials in the jet variables.
    pub grad: f64,
    pub cond1: bool,
    pub cond2: bool,
    pub cond4: bool,
    pub cond6: Option<bool>,
    pub cond8: Option<bool>,
    pub eta_m_free: bool,
}

impl ConditionReport {
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let flag = |b: bool| if b { "satisfied" } else { "violated" };
        let _ = writeln!(s, "abs_a0 = {}", fmt_f64(self.a0));
        let _ = writeln!(s, "abs_d_eta_m_a0 = {}", fmt_f64(self.d_eta_m));
        let _ = writeln!(s, "abs_dbar_eta_m_a0 = {}", fmt_f64(self.dbar_eta_m));
        let _ = writeln!(s, "kappa = {}", fmt_f64(self.kappa));
        let _ = writeln!(s, "grad_a0 = {}", fmt_f64(self.grad));
        let waived = if self.eta_m_free { " (not required: independent of eta_m)" } else { "" };
        let _ = writeln!(s, "condition (1) {}{waived}", flag(self.cond1));
        let _ = writeln!(s, "condition (2) {}{waived}", flag(self.cond2));
        let _ = writeln!(s, "condition (4) {}", flag(self.cond4));
        match self.cond6 {
            Some(b) => {
                let _ = writeln!(s, "condition (6) {}", flag(b));
            }
            None => s.push_str("condition (6) not applicable (system depends on z)\n"),
        }
        match self.cond8 {
            Some(b) => {
                let _ = writeln!(s, "condition (8) {}", flag(b));
            }
            None => s.push_str("condition (8) not applicable (system depends on z)\n"),
        }
        if self.eta_m_free {
            s.push_str("regime = independent of eta_m\n");
        }
        s.push_str("thresholds = user-configured epsilon, delta, tau (no explicit smallness constants exist)\n");
        s
    }
}

/// Evaluates the origin hypotheses.
pub fn check_theorem_conditions(system: &RhsSystem, th: &Thresholds) -> ConditionReport {
    let w = system.jet_width();
    let e = jet_len(system.m);
    let zero = vec![C64::new(0.0, 0.0); w];
    let h = 1e-4;
    let steps = Partials {
        z: h,
        eta: vec![h; system.m + 1],
    };
    let origin = C64::new(0.0, 0.0);
    let p = system.partials(origin, &zero, steps.clone());
    let top: Vec<usize> = (0..w).filter(|&k| level_of(k % e) == system.m).collect();
    let mut d_eta_m = 0.0f64;
    let mut dbar_eta_m = 0.0f64;
    let mut grad = 0.0f64;
    for c in 0..system.n {
        for k in 0..w {
            let (d, db) = (p.deta[c * w + k].norm(), p.detabar[c * w + k].norm());
            grad = grad.max(d).max(db);
            if top.contains(&k) {
                d_eta_m = d_eta_m.max(d);
                dbar_eta_m = dbar_eta_m.max(db);
            }
        }
    }
    // second derivatives: differences of first partials along each eta_m slot
    let mut kappa = 0.0f64;
    for &k in &top {
        let mut bundle = vec![0.0f64; system.n];
        for dir in [C64::new(h, 0.0), C64::new(0.0, h)] {
            let mut jp = zero.clone();
            jp[k] = dir;
            let pp = system.partials(origin, &jp, steps.clone());
            jp[k] = -dir;
            let pm = system.partials(origin, &jp, steps.clone());
            for c in 0..system.n {
                for &k2 in &top {
                    let i = c * w + k2;
                    bundle[c] += 0.5 * ((pp.deta[i] - pm.deta[i]).norm() + (pp.detabar[i] - pm.detabar[i]).norm()) / (2.0 * h);
                }
            }
        }
        kappa = kappa.max(bundle.into_iter().fold(0.0, f64::max));
    }
    if system.eta_m_free {
        d_eta_m = 0.0;
        dbar_eta_m = 0.0;
        kappa = 0.0;
    }
    let a0 = system.value_at_origin();
    let cond1 = a0 <= th.zero && d_eta_m <= th.zero && dbar_eta_m <= th.zero;
    let cond2 = kappa <= th.zero.sqrt();
    let cond4 = a0 < th.epsilon && d_eta_m + dbar_eta_m < th.delta && kappa < th.delta;
    let global = system.autonomous.then_some(a0 < th.epsilon && grad < th.tau);
    ConditionReport {
        a0,
        d_eta_m,
        dbar_eta_m,
        kappa,
        grad,
        cond1,
        cond2,
        cond4,
        cond6: global,
        cond8: global,
        eta_m_free: system.eta_m_free,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    /// Shrink `R` at each `gamma`.
    Local,
    /// Fix `R`, shrink `gamma` (autonomous systems only).
    Global,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Binding {
    Delta,
    Eta,
    BoxFit,
    SeedCap,
    Domain(String),
}

impl std::fmt::Display for Binding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Binding::Delta => write!(f, "delta > 3/4"),
            Binding::Eta => write!(f, "eta > gamma/2"),
            Binding::BoxFit => write!(f, "6^m R^m gamma > R'"),
            Binding::SeedCap => write!(f, "seed norm > gamma/2"),
            Binding::Domain(s) => write!(f, "outside domain: {s}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SweepOptions {
    pub alpha: f64,
    pub strategy: Strategy,
    pub r_init: f64,
    pub r_halvings: usize,
    /// `gamma = 10^j` for `j` in this inclusive range.
    pub gamma_exponents: (i32, i32),
    pub envelope: EnvelopeOptions,
    pub thresholds: Thresholds,
    /// `||psi||^(m)`; when given, pairs with `gamma / 2` below it are rejected.
    pub seed_norm: Option<f64>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            strategy: Strategy::Local,
            r_init: 0.5,
            r_halvings: 40,
            gamma_exponents: (-6, 6),
            envelope: EnvelopeOptions::default(),
            thresholds: Thresholds::default(),
            seed_norm: None,
        }
    }
}

impl SweepOptions {
    /// Ladder in sweep order.
    pub fn ladder(&self) -> Vec<Vec<(f64, f64)>> {
        let (lo, hi) = self.gamma_exponents;
        let gammas: Vec<f64> = (lo..=hi).map(|j| 10f64.powi(j)).collect();
        match self.strategy {
            Strategy::Local => (0..=self.r_halvings)
                .map(|i| {
                    let r = self.r_init * 0.5f64.powi(i as i32);
                    gammas.iter().map(|&g| (r, g)).collect()
                })
                .collect(),
            Strategy::Global => vec![gammas.iter().rev().map(|&g| (self.r_init, g)).collect()],
        }
    }
}

/// One `(R, gamma)` evaluation.
#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub r: f64,
    pub gamma: f64,
    pub delta: f64,
    pub eta: f64,
    pub feasible: bool,
    pub binding: Option<Binding>,
}

/// Everything known about one `(R, gamma)`.
#[derive(Clone, Debug)]
pub struct ConstantsReport {
    pub system: String,
    pub alpha: f64,
    pub m: usize,
    pub r: f64,
    pub gamma: f64,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub envelopes: Envelopes,
    pub ledger: Ledger,
    pub a0: f64,
    pub seed_cap: f64,
    pub seed_norm: Option<f64>,
    pub box_fit: bool,
    pub conditions: ConditionReport,
    pub feasible: bool,
    pub binding: Option<Binding>,
    pub safety: f64,
    pub samples: usize,
}

impl ConstantsReport {
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: f64| {
            let _ = writeln!(s, "{k} = {}", fmt_f64(v));
        };
        kv("alpha", self.alpha);
        kv("R", self.r);
        kv("gamma", self.gamma);
        kv("C0", self.c0);
        kv("C1", self.c1);
        kv("C2", self.c2);
        kv("M", self.ledger.gain);
        kv("M_row", self.ledger.row);
        let e = &self.envelopes;
        kv("A", e.a);
        kv("B", e.b);
        kv("C", e.c);
        kv("H_alpha_A", e.h_alpha_a);
        kv("H_alpha_B", e.h_alpha_b);
        kv("H_alpha_C", e.h_alpha_c);
        kv("H_1_A", e.h1_a);
        kv("H_1_B", e.h1_b);
        kv("H_1_C", e.h1_c);
        let l = &self.ledger;
        kv("delta1", l.delta1);
        kv("delta2", l.delta2);
        kv("delta3", l.delta3);
        kv("delta4", l.delta4);
        kv("delta5", l.delta5);
        kv("delta", l.delta);
        kv("eta", l.eta);
        kv("abs_a0", self.a0);
        kv("seed_cap", self.seed_cap);
        if let Some(sn) = self.seed_norm {
            kv("seed_norm", sn);
        }
        let mut s = s;
        let _ = writeln!(s, "system = {}", self.system);
        let _ = writeln!(s, "m = {}", self.m);
        let _ = writeln!(s, "safety_factor = {}", fmt_f64(self.safety));
        let _ = writeln!(s, "envelope_samples = {}", self.samples);
        let _ = writeln!(s, "box_fit = {}", self.box_fit);
        s.push_str("convention = delta = (M + 2^m M_row) delta1, eta = (M + 2^m M_row)(|a(0)| + delta5)\n");
        s.push_str("solve_domain = full disk (boundary terms by exact residues)\n");
        s.push_str(&self.conditions.to_kv());
        match &self.binding {
            None if self.feasible => s.push_str("verdict = feasible\n"),
            Some(b) => {
                let _ = writeln!(s, "verdict = infeasible");
                let _ = writeln!(s, "binding = {b}");
            }
            None => s.push_str("verdict = infeasible\n"),
        }
        s
    }
}

/// Full report at one `(R, gamma)`.
pub fn constants_report(system: &RhsSystem, r: f64, gamma: f64, opts: &SweepOptions) -> Result<ConstantsReport> {
    let (alpha, env_opts, th) = (opts.alpha, &opts.envelope, &opts.thresholds);
    let (c0, c1, c2) = base_constants(alpha)?;
    let conditions = check_theorem_conditions(system, th);
    let box_fit = 6f64.powi(system.m as i32) * r.powi(system.m as i32) * gamma <= system.eta0_radius;
    let (envelopes, binding) = match EnvelopeSet::new(system, r, gamma, env_opts) {
        Ok(set) => (envelope_bounds(system, &set, alpha, env_opts)?, None),
        Err(Error::OutsideDomain(msg)) => (
            Envelopes::default(),
            Some(if box_fit { Binding::Domain(msg) } else { Binding::BoxFit }),
        ),
        Err(e) => return Err(e),
    };
    let a0 = system.value_at_origin();
    let ledger = delta_eta_ledger(system.m, alpha, r, gamma, &envelopes, a0)?;
    let binding = binding.or_else(|| {
        if ledger.delta > 0.75 {
            Some(Binding::Delta)
        } else if ledger.eta > gamma / 2.0 {
            Some(Binding::Eta)
        } else if opts.seed_norm.is_some_and(|s| s > gamma / 2.0) {
            Some(Binding::SeedCap)
        } else {
            None
        }
    });
    Ok(ConstantsReport {
        system: system.name.clone(),
        alpha,
        m: system.m,
        r,
        gamma,
        c0,
        c1,
        c2,
        envelopes,
        ledger,
        a0,
        seed_cap: gamma / 2.0,
        seed_norm: opts.seed_norm,
        box_fit,
        conditions,
        feasible: binding.is_none(),
        binding,
        safety: env_opts.safety,
        samples: env_opts.samples,
    })
}

/// Outcome of a sweep: the first feasible pair in ladder order, or the
/// point with the smallest `delta` and its binding constraint.
#[derive(Clone, Debug)]
pub struct Feasibility {
    pub chosen: Option<(f64, f64)>,
    pub report: ConstantsReport,
    pub points: Vec<SweepPoint>,
}

fn to_point(r: &ConstantsReport) -> SweepPoint {
    SweepPoint {
        r: r.r,
        gamma: r.gamma,
        delta: r.ledger.delta,
        eta: r.ledger.eta,
        feasible: r.feasible,
        binding: r.binding.clone(),
    }
}

/// Sweeps the ladder row by row (rows in parallel internally) and stops at
/// the first feasible point.
pub fn feasibility_search(system: &RhsSystem, opts: &SweepOptions) -> Result<Feasibility> {
    check_alpha(opts.alpha)?;
    let mut points = Vec::new();
    let mut best: Option<ConstantsReport> = None;
    for row in opts.ladder() {
        let reports = row
            .par_iter()
            .map(|&(r, g)| constants_report(system, r, g, opts))
            .collect::<Result<Vec<_>>>()?;
        for rep in reports {
            points.push(to_point(&rep));
            if rep.feasible {
                return Ok(Feasibility {
                    chosen: Some((rep.r, rep.gamma)),
                    report: rep,
                    points,
                });
            }
            let better = match &best {
                None => true,
                Some(b) => {
                    let rank = |x: &ConstantsReport| (x.binding == Some(Binding::BoxFit) || matches!(x.binding, Some(Binding::Domain(_))), x.ledger.delta.max(2.0 * x.ledger.eta / x.gamma));
                    let (ob, ov) = rank(b);
                    let (nb, nv) = rank(&rep);
                    (nb, nv) < (ob, ov)
                }
            };
            if better {
                best = Some(rep);
            }
        }
    }
    Ok(Feasibility {
        chosen: None,
        report: best.expect("non-empty ladder"),
        points,
    })
}

/// Every ladder point, for the region table.
pub fn region(system: &RhsSystem, opts: &SweepOptions) -> Result<Vec<SweepPoint>> {
    check_alpha(opts.alpha)?;
    let pts: Vec<(f64, f64)> = opts.ladder().into_iter().flatten().collect();
    pts.par_iter()
        .map(|&(r, g)| constants_report(system, r, g, opts).map(|rep| to_point(&rep)))
        .collect()
}

/// CSV `R,gamma,delta,eta,feasible`.
pub fn region_csv(points: &[SweepPoint]) -> String {
    let mut s = String::from("R,gamma,delta,eta,feasible\n");
    for p in points {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            fmt_f64(p.r),
            fmt_f64(p.gamma),
            fmt_f64(p.delta),
            fmt_f64(p.eta),
            p.feasible
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_at_one_half() {
        let (c0, c1, c2) = base_constants(0.5).unwrap();
        assert_eq!(c0, 48.0);
        assert_eq!(c1, 4.0 * 2f64.sqrt());
        assert_eq!(c2, 16.0);
        assert!(base_constants(1.0).is_err());
        assert!((operator_gain(1, 0.5, 0.3).unwrap() - 53.65685424949238).abs() < 1e-12);
        let m2 = operator_gain(2, 0.5, 1.0).unwrap();
        assert!((m2 - 2.0 * (2.0 * c1 + c0 + c2).powi(2)).abs() < 1e-9);
    }

    #[test]
    fn homogeneous_ledger() {
        let l = delta_eta_ledger(2, 0.5, 0.1, 1.0, &Envelopes::default(), 0.0).unwrap();
        assert_eq!((l.delta, l.eta), (0.0, 0.0));
    }

    #[test]
    fn unit_b_envelope_at_first_order() {
        let env = Envelopes {
            b: 1.0,
            ..Default::default()
        };
        let l = delta_eta_ledger(1, 0.5, 1.0, 1.0, &env, 0.0).unwrap();
        assert_eq!(l.delta1, 1.0);
        assert!((l.delta - 3.0 * 53.65685424949238).abs() < 1e-9);
    }

    #[test]
    fn delta1_is_linear_in_gamma_h1b() {
        let env = Envelopes {
            h1_b: 0.3,
            ..Default::default()
        };
        let a = delta_eta_ledger(2, 0.5, 0.1, 1.0, &env, 0.0).unwrap().delta1;
        let b = delta_eta_ledger(2, 0.5, 0.1, 2.0, &env, 0.0).unwrap().delta1;
        assert!((b - 2.0 * a).abs() < 1e-15);
    }
}
