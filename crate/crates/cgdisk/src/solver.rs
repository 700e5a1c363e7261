//! Picard iteration `u_{N+1} = psi + Theta(u_N)` with
//! `Theta(u) = taylor_subtract(T^nu Tbar^mu a(z, D^0 u, ..., D^m u))`.

use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{fmt_f64, DiscGrid, ScalarField};
use crate::holder::{jet_len, jet_norms, jet_pairs, level_norm, taylor_subtract, JetField, NormReport};
use crate::ops::green::compose_green;
use crate::system::{level_of, make_seed, JetMode, JetSpec, RhsSystem};
use crate::C64;

/// Which structure the iterates keep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Structure {
    General,
    /// `mu = nu`, entries symmetrized so `d^i dbar^j u = conj(d^j dbar^i u)`.
    Real,
    /// `nu = 0`, entries with a `dbar` projected out.
    Holomorphic,
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub alpha: f64,
    pub max_iter: usize,
    /// Step tolerance relative to `gamma`.
    pub step_tol: f64,
    pub residual_tol: f64,
    /// Largest last ratio accepted for a converged verdict.
    pub ratio_limit: f64,
    /// Consecutive ratios above one before declaring divergence.
    pub divergence_run: usize,
    /// Scale for the step tolerance; `None` uses `max(1, ||psi||^(m))`.
    pub gamma: Option<f64>,
    /// Run all `max_iter` iterations regardless of convergence.
    pub forced: bool,
    pub holomorphic_limit: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            max_iter: 60,
            step_tol: 1e-10,
            residual_tol: 1e-8,
            ratio_limit: 0.75,
            divergence_run: 5,
            gamma: None,
            forced: false,
            holomorphic_limit: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Termination {
    Converged,
    MaxIterations,
    Diverged,
    EnvelopeEscape(String),
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Termination::Converged => write!(f, "converged"),
            Termination::MaxIterations => write!(f, "max_iterations"),
            Termination::Diverged => write!(f, "diverged"),
            Termination::EnvelopeEscape(s) => write!(f, "envelope_escape ({s})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub step_norm: f64,
    pub ratio: Option<f64>,
    pub residual_sup: f64,
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub system: String,
    pub structure: Structure,
    pub termination: Termination,
    pub iterations: Vec<IterationRecord>,
    pub solution: JetField,
    pub seed_norm: f64,
    pub solution_norm: Option<NormReport>,
    pub residual_sup: f64,
    /// Largest `|achieved - prescribed|` over the origin jet.
    pub jet_error: f64,
    pub holomorphic_defect: f64,
    pub real_defect: f64,
}

impl SolveReport {
    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }

    pub fn last_ratio(&self) -> Option<f64> {
        self.iterations.iter().rev().find_map(|r| r.ratio)
    }

    /// CSV `iter,step_norm,ratio,residual_sup`.
    pub fn convergence_csv(&self) -> String {
        let mut s = String::from("iter,step_norm,ratio,residual_sup\n");
        for r in &self.iterations {
            let ratio = r.ratio.map(fmt_f64).unwrap_or_default();
            let _ = writeln!(s, "{},{},{},{}", r.iter, fmt_f64(r.step_norm), ratio, fmt_f64(r.residual_sup));
        }
        s
    }

    /// `(file name, csv)` for every solution entry; components after the
    /// first get a `c<k>_` prefix.
    pub fn field_csvs(&self) -> Vec<(String, String)> {
        let u = &self.solution;
        let mut out = Vec::new();
        for c in 0..u.n() {
            for (i, j) in jet_pairs(u.depth()) {
                let name = if u.n() == 1 {
                    format!("u_{i}_{j}.csv")
                } else {
                    format!("c{c}_u_{i}_{j}.csv")
                };
                out.push((name, u.entry(c, i, j).to_csv()));
            }
        }
        out
    }

    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let g = self.solution.grid();
        let _ = writeln!(s, "system = {}", self.system);
        let _ = writeln!(s, "structure = {:?}", self.structure);
        let _ = writeln!(s, "termination = {}", self.termination);
        let _ = writeln!(s, "iterations = {}", self.iterations.len());
        let _ = writeln!(s, "grid_radius = {}", fmt_f64(g.radius()));
        let _ = writeln!(s, "grid_n_r = {}", g.n_r());
        let _ = writeln!(s, "grid_n_theta = {}", g.n_t());
        if let Some(r) = self.last_ratio() {
            let _ = writeln!(s, "last_ratio = {}", fmt_f64(r));
        }
        let _ = writeln!(s, "seed_norm = {}", fmt_f64(self.seed_norm));
        let _ = writeln!(s, "residual_sup = {}", fmt_f64(self.residual_sup));
        let _ = writeln!(s, "jet_error = {}", fmt_f64(self.jet_error));
        let _ = writeln!(s, "holomorphic_defect = {}", fmt_f64(self.holomorphic_defect));
        let _ = writeln!(s, "real_defect = {}", fmt_f64(self.real_defect));
        if let Some(n) = &self.solution_norm {
            s.push_str(&n.to_kv("solution_"));
        }
        s
    }
}

/// `a(z, u)` at every node, with the box check against `R'` and `gamma'`.
pub fn sample_rhs(system: &RhsSystem, u: &JetField) -> Result<Vec<ScalarField>> {
    let grid = u.grid();
    let nodes: Vec<C64> = grid.all_nodes().collect();
    let w = system.jet_width();
    let e = jet_len(system.m);
    let n = system.n;
    if u.n() != n || u.depth() != system.m {
        return Err(Error::LengthMismatch {
            expected: w,
            got: u.n() * jet_len(u.depth()),
        });
    }
    // collected per node so the reported escape is the first in node order
    let values: Vec<Result<Vec<C64>>> = nodes
        .par_iter()
        .enumerate()
        .map_init(
            || vec![C64::new(0.0, 0.0); w],
            |jet, (k, &z)| {
                u.gather(k, jet);
                let mut big0 = 0.0f64;
                let mut bigm = 0.0f64;
                for (idx, v) in jet.iter().enumerate() {
                    match level_of(idx % e) {
                        0 => big0 = big0.max(v.norm()),
                        l if l == system.m => bigm = bigm.max(v.norm()),
                        _ => {}
                    }
                }
                if big0 > system.eta0_radius {
                    return Err(Error::EnvelopeEscape {
                        z,
                        what: format!("|eta_0| = {} > R' = {}", fmt_f64(big0), fmt_f64(system.eta0_radius)),
                    });
                }
                if bigm > system.etam_radius {
                    return Err(Error::EnvelopeEscape {
                        z,
                        what: format!("|eta_m| = {} > gamma' = {}", fmt_f64(bigm), fmt_f64(system.etam_radius)),
                    });
                }
                let mut out = vec![C64::new(0.0, 0.0); n];
                system.eval(z, jet, &mut out);
                if let Some(bad) = out.iter().find(|v| !v.is_finite()) {
                    return Err(Error::Evaluator {
                        z,
                        reason: format!("non-finite value {bad}"),
                    });
                }
                Ok(out)
            },
        )
        .collect();
    let values = values.into_iter().collect::<Result<Vec<_>>>()?;
    let ni = grid.n_interior();
    Ok((0..n)
        .map(|c| {
            let all: Vec<C64> = values.iter().map(|v| v[c]).collect();
            ScalarField::new(grid.clone(), all[..ni].to_vec(), all[ni..].to_vec()).expect("grid-shaped")
        })
        .collect())
}

/// `Theta` applied to precomputed right-hand side samples.
pub fn theta_from_rhs(system: &RhsSystem, h: &[ScalarField], structure: Structure, limit: f64) -> Result<JetField> {
    let parts = h
        .iter()
        .map(|hc| compose_green(system.nu, system.mu, hc).and_then(|j| taylor_subtract(&j, system.mu, system.nu)))
        .collect::<Result<Vec<_>>>()?;
    let mut out = JetField::from_components(parts)?;
    match structure {
        Structure::General => {}
        Structure::Real => out.symmetrize_real(),
        Structure::Holomorphic => {
            let d = out.project_holomorphic();
            if d > limit {
                return Err(Error::HolomorphicDefect { defect: d, limit });
            }
        }
    }
    Ok(out)
}

/// One application of `Theta`.
pub fn theta_step(system: &RhsSystem, u: &JetField, structure: Structure) -> Result<JetField> {
    let h = sample_rhs(system, u)?;
    theta_from_rhs(system, &h, structure, SolveOptions::default().holomorphic_limit)
}

/// Sup over nodes and components of `d^mu dbar^nu u - a(z, D u)`, scaled by
/// the system's residual factor.
pub fn residual(system: &RhsSystem, u: &JetField) -> Result<f64> {
    let h = sample_rhs(system, u)?;
    Ok(residual_against(system, u, &h))
}

fn residual_against(system: &RhsSystem, u: &JetField, h: &[ScalarField]) -> f64 {
    (0..system.n)
        .map(|c| {
            u.entry(c, system.mu, system.nu)
                .values()
                .zip(h[c].values())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
        * system.residual_scale
}

fn check_inputs(system: &RhsSystem, spec: &JetSpec, grid: &DiscGrid, structure: Structure) -> Result<()> {
    if (spec.mu, spec.nu, spec.n) != (system.mu, system.nu, system.n) {
        return Err(Error::InvalidJetSpec(format!(
            "jet spec is for (mu, nu, n) = ({}, {}, {}), system has ({}, {}, {})",
            spec.mu, spec.nu, spec.n, system.mu, system.nu, system.n
        )));
    }
    spec.validate()?;
    if grid.radius() > system.disk_radius {
        return Err(Error::OutsideDomain(format!(
            "grid radius {} exceeds the system's disk radius {}",
            grid.radius(),
            system.disk_radius
        )));
    }
    match structure {
        Structure::Real if !system.real_valued || system.mu != system.nu => Err(Error::InvalidSystem(
            "real solve needs a real-valued system with mu = nu".into(),
        )),
        Structure::Holomorphic if !system.holomorphic || system.nu != 0 => Err(Error::InvalidSystem(
            "holomorphic solve needs a holomorphic system with nu = 0".into(),
        )),
        _ => Ok(()),
    }
}

fn jet_error(u: &JetField, spec: &JetSpec) -> f64 {
    let e = jet_len(spec.m);
    let origin = u.origin_jet();
    let mut worst = 0.0f64;
    for c in 0..spec.n {
        for (i, j) in jet_pairs(spec.m).filter(|&p| p != (spec.mu, spec.nu)) {
            let want = spec.values.get(&(i, j)).map_or(C64::new(0.0, 0.0), |v| v[c]);
            worst = worst.max((origin[c * e + crate::jet_index(i, j)] - want).norm());
        }
    }
    worst
}

/// Iterates from the seed built from `spec`.
///
/// In polynomial mode the lower levels of `spec` enter the seed directly,
/// which is the same iteration as solving for `u - p` against the shifted
/// right-hand side.
pub fn solve_with(
    system: &RhsSystem,
    spec: &JetSpec,
    grid: &Arc<DiscGrid>,
    structure: Structure,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    check_inputs(system, spec, grid, structure)?;
    if spec.mode == JetMode::Vanishing && spec.values.iter().any(|(&(i, j), v)| i + j < spec.m && v.iter().any(|x| x.norm() != 0.0)) {
        return Err(Error::InvalidJetSpec("vanishing mode with lower-level data".into()));
    }
    let mut psi = make_seed(spec, grid)?;
    if structure == Structure::Real {
        psi.symmetrize_real();
    }
    let m = system.m;
    let seed_norm = level_norm(&psi, m, opts.alpha)?.composite;
    let scale = opts.gamma.unwrap_or(seed_norm.max(1.0));
    let mut u = psi.clone();
    let mut iterations: Vec<IterationRecord> = Vec::new();
    let mut termination = Termination::MaxIterations;
    let mut rising = 0usize;
    let mut last_defect = 0.0f64;
    let mut h = match sample_rhs(system, &u) {
        Ok(h) => Some(h),
        Err(Error::EnvelopeEscape { z, what }) => {
            termination = Termination::EnvelopeEscape(format!("{what} at z = {z}"));
            None
        }
        Err(e) => return Err(e),
    };
    let mut residual_sup = h.as_ref().map_or(f64::INFINITY, |h| residual_against(system, &u, h));
    if let Some(mut hn) = h.take() {
        for iter in 1..=opts.max_iter {
            let theta = theta_from_rhs(system, &hn, structure, opts.holomorphic_limit)?;
            if structure == Structure::Holomorphic {
                last_defect = last_defect.max(theta.holomorphic_defect());
            }
            let mut next = psi.add(&theta)?;
            next.real_valued = structure == Structure::Real;
            next.holomorphic = structure == Structure::Holomorphic;
            next.vanishing_order = true;
            let mut diff = next.sub(&u)?;
            diff.vanishing_order = true;
            let step = level_norm(&diff, m, opts.alpha)?.composite;
            let ratio = iterations.last().map(|r| {
                if r.step_norm == 0.0 {
                    if step == 0.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    step / r.step_norm
                }
            });
            u = next;
            hn = match sample_rhs(system, &u) {
                Ok(h) => h,
                Err(Error::EnvelopeEscape { z, what }) => {
                    iterations.push(IterationRecord {
                        iter,
                        step_norm: step,
                        ratio,
                        residual_sup: f64::NAN,
                    });
                    termination = Termination::EnvelopeEscape(format!("{what} at z = {z}"));
                    break;
                }
                Err(e) => return Err(e),
            };
            residual_sup = residual_against(system, &u, &hn);
            iterations.push(IterationRecord {
                iter,
                step_norm: step,
                ratio,
                residual_sup,
            });
            if opts.forced {
                continue;
            }
            if ratio.is_some_and(|r| r > 1.0) {
                rising += 1;
            } else {
                rising = 0;
            }
            if rising >= opts.divergence_run || !step.is_finite() {
                termination = Termination::Diverged;
                break;
            }
            let ratio_ok = ratio.map_or(true, |r| r <= opts.ratio_limit);
            if step <= opts.step_tol * scale && residual_sup <= opts.residual_tol && ratio_ok {
                termination = Termination::Converged;
                break;
            }
        }
    }
    let solution_norm = jet_norms(&u, opts.alpha).ok();
    Ok(SolveReport {
        system: system.name.clone(),
        structure,
        termination,
        iterations,
        seed_norm,
        solution_norm,
        residual_sup,
        jet_error: jet_error(&u, spec),
        holomorphic_defect: if structure == Structure::Holomorphic { last_defect } else { u.holomorphic_defect() },
        real_defect: u.real_defect(),
        solution: u,
    })
}

pub fn solve(system: &RhsSystem, spec: &JetSpec, grid: &Arc<DiscGrid>, opts: &SolveOptions) -> Result<SolveReport> {
    solve_with(system, spec, grid, Structure::General, opts)
}

pub fn solve_real(system: &RhsSystem, spec: &JetSpec, grid: &Arc<DiscGrid>, opts: &SolveOptions) -> Result<SolveReport> {
    solve_with(system, spec, grid, Structure::Real, opts)
}

pub fn solve_holomorphic(
    system: &RhsSystem,
    spec: &JetSpec,
    grid: &Arc<DiscGrid>,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    solve_with(system, spec, grid, Structure::Holomorphic, opts)
}

/// Structure implied by the system flags.
pub fn natural_structure(system: &RhsSystem) -> Structure {
    if system.holomorphic {
        Structure::Holomorphic
    } else if system.real_valued {
        Structure::Real
    } else {
        Structure::General
    }
}

/// The system whose ledger governs a solve: in polynomial mode the lower
/// levels of the spec shift the jet argument.
pub fn effective_system(system: &RhsSystem, spec: &JetSpec) -> Result<RhsSystem> {
    let m = spec.m;
    let terms = spec.terms(|l| l < m);
    if spec.mode == JetMode::Polynomial && terms.iter().any(|t| !t.is_empty()) {
        let mut out = system.shifted(terms)?;
        let offset = spec.values.get(&(0, 0)).map_or(0.0, |v| v.iter().map(|x| x.norm()).fold(0.0, f64::max));
        out.eta0_radius -= offset;
        Ok(out)
    } else {
        Ok(system.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_rhs_returns_the_seed() {
        let g = DiscGrid::new(0.5, 8, 16).unwrap();
        let sys = RhsSystem::new("zero", 0, 1, 1, |_, _, o| o[0] = C64::new(0.0, 0.0)).unwrap();
        let spec = JetSpec::new(0, 1, 1, JetMode::Vanishing).set(1, 0, vec![C64::new(1.0, 0.0)]);
        let rep = solve(&sys, &spec, &g, &SolveOptions::default()).unwrap();
        assert!(rep.converged());
        assert_eq!(rep.iterations.len(), 1);
        for (k, z) in g.all_nodes().enumerate() {
            assert_eq!(rep.solution.entry(0, 0, 0).at(k), z);
        }
    }

    #[test]
    fn constant_rhs_gives_conjugate_polynomial() {
        let g = DiscGrid::new(0.5, 8, 16).unwrap();
        let sys = RhsSystem::new("c", 0, 1, 1, |_, _, o| o[0] = C64::new(2.0, 0.0)).unwrap();
        let spec = JetSpec::new(0, 1, 1, JetMode::Vanishing);
        let rep = solve(&sys, &spec, &g, &SolveOptions::default()).unwrap();
        assert!(rep.converged(), "{:?}", rep.termination);
        for (k, z) in g.all_nodes().enumerate() {
            assert!((rep.solution.entry(0, 0, 0).at(k) - z.conj() * 2.0).norm() < 1e-12);
        }
    }

    #[test]
    fn escape_is_reported() {
        let g = DiscGrid::new(0.5, 8, 16).unwrap();
        let sys = RhsSystem::new("c", 0, 1, 1, |_, _, o| o[0] = C64::new(2.0, 0.0))
            .unwrap()
            .with_domain(1.0, 0.1, 10.0);
        let spec = JetSpec::new(0, 1, 1, JetMode::Vanishing);
        let rep = solve(&sys, &spec, &g, &SolveOptions::default()).unwrap();
        assert!(matches!(rep.termination, Termination::EnvelopeEscape(_)));
    }
}
