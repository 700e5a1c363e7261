//! Right-hand sides `a(z, eta_0, ..., eta_m)` and prescribed origin jets.
//!
//! An evaluator receives `z` and a jet laid out as `jet[c * E + jet_index(i, j)]`
//! with `E = jet_len(m)`, and writes `n` values.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::holder::{factorial, jet_index, jet_len, jet_pairs, polynomial_jet, JetField};
use crate::grid::DiscGrid;
use crate::C64;

pub type Evaluator = Arc<dyn Fn(C64, &[C64], &mut [C64]) + Send + Sync>;

/// `d^mu dbar^nu u = a(z, D^0 u, ..., D^m u)` with its domain and flags.
#[derive(Clone)]
pub struct RhsSystem {
    pub name: String,
    pub m: usize,
    pub mu: usize,
    pub nu: usize,
    pub n: usize,
    eval: Evaluator,
    /// Radius of the `z` domain.
    pub disk_radius: f64,
    /// `R'`: admissible `|eta_0|`.
    pub eta0_radius: f64,
    /// `gamma'`: admissible `|eta_m|`.
    pub etam_radius: f64,
    pub autonomous: bool,
    pub eta_m_free: bool,
    pub real_valued: bool,
    pub holomorphic: bool,
    /// Factor between the solver residual and the user-facing one
    /// (`4^m'` for `Delta^m' u = A`).
    pub residual_scale: f64,
    pub notes: Vec<String>,
}

impl fmt::Debug for RhsSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RhsSystem")
            .field("name", &self.name)
            .field("m", &self.m)
            .field("mu", &self.mu)
            .field("nu", &self.nu)
            .field("n", &self.n)
            .field("disk_radius", &self.disk_radius)
            .field("eta0_radius", &self.eta0_radius)
            .field("etam_radius", &self.etam_radius)
            .field("autonomous", &self.autonomous)
            .field("eta_m_free", &self.eta_m_free)
            .field("real_valued", &self.real_valued)
            .field("holomorphic", &self.holomorphic)
            .finish_non_exhaustive()
    }
}

impl RhsSystem {
    pub fn new(
        name: impl Into<String>,
        mu: usize,
        nu: usize,
        n: usize,
        eval: impl Fn(C64, &[C64], &mut [C64]) + Send + Sync + 'static,
    ) -> Result<Self> {
        let m = mu + nu;
        if m == 0 {
            return Err(Error::InvalidSystem("order m = mu + nu must be at least 1".into()));
        }
        if n == 0 {
            return Err(Error::InvalidSystem("at least one component required".into()));
        }
        Ok(Self {
            name: name.into(),
            m,
            mu,
            nu,
            n,
            eval: Arc::new(eval),
            disk_radius: f64::INFINITY,
            eta0_radius: f64::INFINITY,
            etam_radius: f64::INFINITY,
            autonomous: false,
            eta_m_free: false,
            real_valued: false,
            holomorphic: false,
            residual_scale: 1.0,
            notes: Vec::new(),
        })
    }

    pub fn with_domain(mut self, disk: f64, eta0: f64, etam: f64) -> Self {
        self.disk_radius = disk;
        self.eta0_radius = eta0;
        self.etam_radius = etam;
        self
    }

    pub fn autonomous(mut self) -> Self {
        self.autonomous = true;
        self
    }

    pub fn eta_m_free(mut self) -> Self {
        self.eta_m_free = true;
        self
    }

    pub fn real(mut self) -> Result<Self> {
        if self.mu != self.nu {
            return Err(Error::InvalidSystem(format!(
                "real systems need mu = nu, got mu = {}, nu = {}",
                self.mu, self.nu
            )));
        }
        self.real_valued = true;
        Ok(self)
    }

    /// Marks the system holomorphic after a Cauchy-Riemann spot check of
    /// the evaluator in every variable at three points.
    pub fn holomorphic(mut self) -> Result<Self> {
        if self.nu != 0 {
            return Err(Error::InvalidSystem("holomorphic systems need nu = 0".into()));
        }
        let w = self.jet_width();
        let h = 1e-6;
        let mut out_p = vec![C64::new(0.0, 0.0); self.n];
        let mut out_m = out_p.clone();
        for s in 0..3 {
            let base_z = C64::from_polar(0.05 * (s + 1) as f64, 0.7 * s as f64 + 0.3);
            let base: Vec<C64> = (0..w)
                .map(|k| C64::from_polar(0.03 * (1 + (k + s) % 4) as f64, 1.1 * k as f64 + s as f64))
                .collect();
            for var in 0..=w {
                let mut dbar = vec![C64::new(0.0, 0.0); self.n];
                for (dir, factor) in [(C64::new(h, 0.0), 0.5), (C64::new(0.0, h), 0.5)] {
                    let (mut jp, mut jm) = (base.clone(), base.clone());
                    let (mut zp, mut zm) = (base_z, base_z);
                    if var == w {
                        zp += dir;
                        zm -= dir;
                    } else {
                        jp[var] += dir;
                        jm[var] -= dir;
                    }
                    (self.eval)(zp, &jp, &mut out_p);
                    (self.eval)(zm, &jm, &mut out_m);
                    let rot = if dir.re != 0.0 { C64::new(1.0, 0.0) } else { C64::new(0.0, 1.0) };
                    for (d, (p, q)) in dbar.iter_mut().zip(out_p.iter().zip(&out_m)) {
                        *d += rot * (p - q) / (2.0 * h) * factor;
                    }
                }
                let scale = out_p.iter().map(|v| v.norm()).fold(1.0, f64::max);
                if let Some(d) = dbar.iter().find(|d| d.norm() > 1e-6 * scale) {
                    return Err(Error::InvalidSystem(format!(
                        "evaluator depends on conjugates (dbar = {d:e} in variable {var})"
                    )));
                }
            }
        }
        self.holomorphic = true;
        Ok(self)
    }

    pub fn with_residual_scale(mut self, s: f64) -> Self {
        self.residual_scale = s;
        self
    }

    pub fn note(mut self, s: impl Into<String>) -> Self {
        self.notes.push(s.into());
        self
    }

    /// Number of complex jet inputs.
    pub fn jet_width(&self) -> usize {
        self.n * jet_len(self.m)
    }

    #[inline]
    pub fn eval(&self, z: C64, jet: &[C64], out: &mut [C64]) {
        (self.eval)(z, jet, out)
    }

    pub fn evaluator(&self) -> Evaluator {
        self.eval.clone()
    }

    /// `|a(0)|` at the zero jet, max over components.
    pub fn value_at_origin(&self) -> f64 {
        let jet = vec![C64::new(0.0, 0.0); self.jet_width()];
        let mut out = vec![C64::new(0.0, 0.0); self.n];
        self.eval(C64::new(0.0, 0.0), &jet, &mut out);
        out.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Wirtinger partials at `(z, jet)` by central differences of step `h`.
    pub fn partials(&self, z: C64, jet: &[C64], h: Partials) -> PartialValues {
        let n = self.n;
        let w = self.jet_width();
        let mut out_p = vec![C64::new(0.0, 0.0); n];
        let mut out_m = out_p.clone();
        let mut jp = jet.to_vec();
        let mut pv = PartialValues {
            dz: vec![C64::new(0.0, 0.0); n],
            dzbar: vec![C64::new(0.0, 0.0); n],
            deta: vec![C64::new(0.0, 0.0); n * w],
            detabar: vec![C64::new(0.0, 0.0); n * w],
        };
        let mut diff = |var: Option<usize>, step: f64, out_d: &mut [C64], out_db: &mut [C64]| {
            let mut fx = vec![C64::new(0.0, 0.0); n];
            let mut fy = vec![C64::new(0.0, 0.0); n];
            for (dir, dst) in [(C64::new(step, 0.0), &mut fx), (C64::new(0.0, step), &mut fy)] {
                match var {
                    None => {
                        self.eval(z + dir, jet, &mut out_p);
                        self.eval(z - dir, jet, &mut out_m);
                    }
                    Some(k) => {
                        jp[k] = jet[k] + dir;
                        self.eval(z, &jp, &mut out_p);
                        jp[k] = jet[k] - dir;
                        self.eval(z, &jp, &mut out_m);
                        jp[k] = jet[k];
                    }
                }
                for (d, (p, q)) in dst.iter_mut().zip(out_p.iter().zip(&out_m)) {
                    *d = (p - q) / (2.0 * step);
                }
            }
            let i = C64::new(0.0, 1.0);
            for c in 0..n {
                out_d[c] = (fx[c] - i * fy[c]) * 0.5;
                out_db[c] = (fx[c] + i * fy[c]) * 0.5;
            }
        };
        diff(None, h.z, &mut pv.dz, &mut pv.dzbar);
        let e = jet_len(self.m);
        let mut d = vec![C64::new(0.0, 0.0); n];
        let mut db = d.clone();
        for k in 0..w {
            let level = level_of(k % e);
            diff(Some(k), h.eta[level], &mut d, &mut db);
            for c in 0..n {
                pv.deta[c * w + k] = d[c];
                pv.detabar[c * w + k] = db[c];
            }
        }
        pv
    }

    /// `b(z, eta) = a(z, eta + D p(z))` for a polynomial `p` given per
    /// component as `[(k, l, coeff of z^k zbar^l)]`.
    pub fn shifted(&self, p: Vec<Vec<(usize, usize, C64)>>) -> Result<Self> {
        if p.len() != self.n {
            return Err(Error::InvalidJetSpec(format!(
                "shift polynomial has {} components, system has {}",
                p.len(),
                self.n
            )));
        }
        let inner = self.eval.clone();
        let m = self.m;
        let e = jet_len(m);
        let mut out = self.clone();
        out.name = format!("{} (shifted)", self.name);
        out.eval = Arc::new(move |z, jet, res| {
            let mut shifted = jet.to_vec();
            for (c, terms) in p.iter().enumerate() {
                for (a, b) in jet_pairs(m) {
                    let mut v = C64::new(0.0, 0.0);
                    for &(k, l, coef) in terms.iter().filter(|t| t.0 >= a && t.1 >= b) {
                        let f = factorial(k) / factorial(k - a) * factorial(l) / factorial(l - b);
                        v += coef * f * z.powi((k - a) as i32) * z.conj().powi((l - b) as i32);
                    }
                    shifted[c * e + jet_index(a, b)] += v;
                }
            }
            inner(z, &shifted, res)
        });
        Ok(out)
    }
}

pub(crate) fn level_of(idx: usize) -> usize {
    let mut l = 0;
    while (l + 1) * (l + 2) / 2 <= idx {
        l += 1;
    }
    l
}

/// Finite-difference steps: one for `z`, one per jet level.
#[derive(Clone, Debug)]
pub struct Partials {
    pub z: f64,
    pub eta: Vec<f64>,
}

/// Wirtinger partials; `deta[c * W + k]` is `d a^c / d eta_k`.
#[derive(Clone, Debug)]
pub struct PartialValues {
    pub dz: Vec<C64>,
    pub dzbar: Vec<C64>,
    pub deta: Vec<C64>,
    pub detabar: Vec<C64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JetMode {
    /// All levels below `m` vanish at the origin.
    Vanishing,
    /// Lower levels come from a polynomial `p`, handled by shifting the RHS.
    Polynomial,
}

/// Prescribed values `d^i dbar^j u(0)` for `(i, j) != (mu, nu)`.
#[derive(Clone, Debug)]
pub struct JetSpec {
    pub m: usize,
    pub mu: usize,
    pub nu: usize,
    pub n: usize,
    pub mode: JetMode,
    pub values: BTreeMap<(usize, usize), Vec<C64>>,
}

impl JetSpec {
    pub fn new(mu: usize, nu: usize, n: usize, mode: JetMode) -> Self {
        Self {
            m: mu + nu,
            mu,
            nu,
            n,
            mode,
            values: BTreeMap::new(),
        }
    }

    pub fn set(mut self, i: usize, j: usize, v: Vec<C64>) -> Self {
        self.values.insert((i, j), v);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        for (&(i, j), v) in &self.values {
            if i + j > self.m {
                bad.push(format!("entry ({i},{j}) exceeds order {}", self.m));
            }
            if (i, j) == (self.mu, self.nu) {
                bad.push(format!("entry ({i},{j}) is fixed by the equation"));
            }
            if v.len() != self.n {
                bad.push(format!("entry ({i},{j}) has {} components, expected {}", v.len(), self.n));
            }
            if v.iter().any(|x| !x.is_finite()) {
                bad.push(format!("entry ({i},{j}) is not finite"));
            }
            if self.mode == JetMode::Vanishing && i + j < self.m && v.iter().any(|x| x.norm() != 0.0) {
                bad.push(format!("entry ({i},{j}) below level {} must vanish in vanishing mode", self.m));
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidJetSpec(bad.join("; ")))
        }
    }

    /// Per-component Taylor terms `(k, l, v / (k! l!))`, optionally split by level.
    pub fn terms(&self, levels: impl Fn(usize) -> bool) -> Vec<Vec<(usize, usize, C64)>> {
        (0..self.n)
            .map(|c| {
                self.values
                    .iter()
                    .filter(|(&(i, j), _)| levels(i + j))
                    .map(|(&(i, j), v)| (i, j, v[c] / (factorial(i) * factorial(j))))
                    .filter(|t| t.2 != C64::new(0.0, 0.0))
                    .collect()
            })
            .collect()
    }

    /// Largest prescribed magnitude.
    pub fn max_abs(&self) -> f64 {
        self.values
            .values()
            .flatten()
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }
}

/// Seed `psi = sum spec(i,j) z^i zbar^j / (i! j!)` with analytic jet entries.
pub fn make_seed(spec: &JetSpec, grid: &Arc<DiscGrid>) -> Result<JetField> {
    spec.validate()?;
    let parts = spec
        .terms(|_| true)
        .into_iter()
        .map(|t| polynomial_jet(grid, spec.m, &t))
        .collect();
    JetField::from_components(parts)
}
