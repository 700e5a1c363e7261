//! Run configuration: one JSON document per run.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::Context;
use cgdisk::ledger::{EnvelopeOptions, Strategy, SweepOptions, Thresholds};
use cgdisk::problems::{self, BuiltinParams, KobayashiOptions, MetricChart, BUILTIN_NAMES};
use cgdisk::solver::{natural_structure, SolveOptions, Structure};
use cgdisk::system::{JetMode, JetSpec, RhsSystem};
use cgdisk::verify::VerifyOptions;
use cgdisk::C64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Informational; the subcommand decides what runs.
    pub command: Option<String>,
    pub system: SystemConfig,
    /// Consistency checks against the chosen system; `mu`, `nu` and `n` also
    /// parametrize the builtins that take them.
    pub m: Option<usize>,
    pub mu: Option<usize>,
    pub nu: Option<usize>,
    pub n: Option<usize>,
    pub alpha: f64,
    pub grid: GridConfig,
    pub jet: JetConfig,
    pub solver: SolverConfig,
    pub sweep: SweepConfig,
    pub envelope: EnvelopeConfig,
    pub thresholds: ThresholdConfig,
    pub kobayashi: KobayashiConfig,
    pub verify: VerifyConfig,
    /// Output directory; `--out` wins.
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: None,
            system: SystemConfig::default(),
            m: None,
            mu: None,
            nu: None,
            n: None,
            alpha: 0.5,
            grid: GridConfig::default(),
            jet: JetConfig::default(),
            solver: SolverConfig::default(),
            sweep: SweepConfig::default(),
            envelope: EnvelopeConfig::default(),
            thresholds: ThresholdConfig::default(),
            kobayashi: KobayashiConfig::default(),
            verify: VerifyConfig::default(),
            output: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    pub builtin: String,
    /// `[re, im]`: `F` for mizohata, `c` in `a(u) = c u` for j_holomorphic,
    /// `A` for m_laplace.
    pub coefficient: Option<[f64; 2]>,
    /// `m'` for m_laplace.
    pub order: Option<usize>,
    pub chart: Option<ChartConfig>,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            builtin: "conj_z".into(),
            coefficient: None,
            order: None,
            chart: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChartConfig {
    /// `flat`, `sphere` or `table`.
    pub kind: String,
    pub half: f64,
    /// CSV table for `kind = table`, relative to the config file.
    pub path: Option<PathBuf>,
}

impl Default for ChartConfig {
    fn default() -> Self {
        Self {
            kind: "flat".into(),
            half: 1e6,
            path: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    /// Disk radius for `sweep.strategy = fixed`.
    pub radius: Option<f64>,
    pub n_r: usize,
    pub n_theta: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            radius: None,
            n_r: 32,
            n_theta: 64,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeConfig {
    Vanishing,
    Polynomial,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JetEntry {
    pub i: usize,
    pub j: usize,
    /// One `[re, im]` per component.
    pub value: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct JetConfig {
    pub mode: ModeConfig,
    pub entries: Vec<JetEntry>,
}

impl Default for JetConfig {
    fn default() -> Self {
        Self {
            mode: ModeConfig::Vanishing,
            entries: Vec::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StructureConfig {
    Auto,
    General,
    Real,
    Holomorphic,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub max_iter: usize,
    pub step_tol: f64,
    pub residual_tol: f64,
    pub ratio_limit: f64,
    pub divergence_run: usize,
    pub forced: bool,
    pub holomorphic_limit: f64,
    pub structure: StructureConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let d = SolveOptions::default();
        Self {
            max_iter: d.max_iter,
            step_tol: d.step_tol,
            residual_tol: d.residual_tol,
            ratio_limit: d.ratio_limit,
            divergence_run: d.divergence_run,
            forced: d.forced,
            holomorphic_limit: d.holomorphic_limit,
            structure: StructureConfig::Auto,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyConfig {
    Local,
    Global,
    Fixed,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// `local` halves `R` from `r_init`; `global` keeps `R = r_init`;
    /// `fixed` uses `grid.radius` and, when given, `gamma`.
    pub strategy: StrategyConfig,
    pub gamma: Option<f64>,
    pub r_init: f64,
    pub r_halvings: usize,
    pub gamma_min_exp: i32,
    pub gamma_max_exp: i32,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let d = SweepOptions::default();
        Self {
            strategy: StrategyConfig::Local,
            gamma: None,
            r_init: d.r_init,
            r_halvings: d.r_halvings,
            gamma_min_exp: d.gamma_exponents.0,
            gamma_max_exp: d.gamma_exponents.1,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvelopeConfig {
    pub samples: usize,
    pub safety: f64,
    pub seed: u64,
    pub fd_step: f64,
}

impl Default for EnvelopeConfig {
    fn default() -> Self {
        let d = EnvelopeOptions::default();
        Self {
            samples: d.samples,
            safety: d.safety,
            seed: d.seed,
            fd_step: d.fd_step,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThresholdConfig {
    pub epsilon: f64,
    pub delta: f64,
    pub tau: f64,
    pub zero: f64,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        let d = Thresholds::default();
        Self {
            epsilon: d.epsilon,
            delta: d.delta,
            tau: d.tau,
            zero: d.zero,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KobayashiConfig {
    pub p: Vec<f64>,
    pub v: Vec<f64>,
    pub r_start: f64,
    pub doublings: usize,
    pub n_r: usize,
    pub n_theta: usize,
}

impl Default for KobayashiConfig {
    fn default() -> Self {
        let d = KobayashiOptions::default();
        Self {
            p: vec![0.0, 0.0],
            v: vec![1.0, 0.0],
            r_start: d.r_start,
            doublings: d.doublings,
            n_r: d.n_r,
            n_theta: d.n_t,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    pub radius: f64,
    pub n_r: usize,
    pub n_theta: usize,
    pub fields: usize,
    pub jets: usize,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        let d = VerifyOptions::default();
        Self {
            radius: d.radius,
            n_r: d.n_r,
            n_theta: d.n_t,
            fields: d.fields,
            jets: d.jets,
            seed: d.seed,
        }
    }
}

/// Every problem found in a config, in field order.
#[derive(Debug)]
pub struct ConfigErrors(pub Vec<String>);

impl std::fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for e in &self.0 {
            writeln!(f, "config error: {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

/// What a validated config resolves to.
pub struct Resolved {
    pub system: RhsSystem,
    pub spec: JetSpec,
    pub structure: Structure,
}

pub fn load(path: &Path) -> anyhow::Result<RunConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut cfg: RunConfig = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if let Some(chart) = cfg.system.chart.as_mut() {
        if let (Some(p), Some(dir)) = (chart.path.as_mut(), path.parent()) {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
    }
    Ok(cfg)
}

fn positive(errs: &mut Vec<String>, name: &str, v: f64) {
    if !(v > 0.0 && v.is_finite()) {
        errs.push(format!("{name} = {v} must be positive and finite"));
    }
}

fn at_least(errs: &mut Vec<String>, name: &str, v: usize, min: usize) {
    if v < min {
        errs.push(format!("{name} = {v} must be at least {min}"));
    }
}

fn complex(v: [f64; 2]) -> C64 {
    C64::new(v[0], v[1])
}

impl RunConfig {
    /// Checks every numeric field, then builds the system and the jet spec.
    pub fn resolve(&self, command: &str) -> Result<Resolved, ConfigErrors> {
        let mut errs = Vec::new();
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            errs.push(format!("alpha = {} outside (0, 1)", self.alpha));
        }
        let g = &self.grid;
        if let Some(r) = g.radius {
            positive(&mut errs, "grid.radius", r);
        }
        at_least(&mut errs, "grid.n_r", g.n_r, 8);
        at_least(&mut errs, "grid.n_theta", g.n_theta, 8);
        if g.n_theta % 2 != 0 {
            errs.push(format!("grid.n_theta = {} must be even", g.n_theta));
        }
        let s = &self.solver;
        at_least(&mut errs, "solver.max_iter", s.max_iter, 1);
        at_least(&mut errs, "solver.divergence_run", s.divergence_run, 1);
        positive(&mut errs, "solver.step_tol", s.step_tol);
        positive(&mut errs, "solver.residual_tol", s.residual_tol);
        positive(&mut errs, "solver.holomorphic_limit", s.holomorphic_limit);
        if !(s.ratio_limit > 0.0 && s.ratio_limit < 1.0) {
            errs.push(format!("solver.ratio_limit = {} outside (0, 1)", s.ratio_limit));
        }
        let w = &self.sweep;
        if let Some(gm) = w.gamma {
            positive(&mut errs, "sweep.gamma", gm);
        }
        positive(&mut errs, "sweep.r_init", w.r_init);
        if w.gamma_min_exp > w.gamma_max_exp {
            errs.push(format!(
                "sweep.gamma_min_exp = {} exceeds sweep.gamma_max_exp = {}",
                w.gamma_min_exp, w.gamma_max_exp
            ));
        }
        if w.gamma_min_exp < -300 || w.gamma_max_exp > 300 {
            errs.push("sweep gamma exponents must lie in [-300, 300]".into());
        }
        if w.strategy == StrategyConfig::Fixed && g.radius.is_none() {
            errs.push("sweep.strategy = fixed needs grid.radius".into());
        }
        if w.strategy == StrategyConfig::Fixed && command == "constants" && w.gamma.is_none() {
            errs.push("constants with sweep.strategy = fixed needs sweep.gamma".into());
        }
        let e = &self.envelope;
        at_least(&mut errs, "envelope.samples", e.samples, 1);
        if !(e.safety >= 1.0 && e.safety.is_finite()) {
            errs.push(format!("envelope.safety = {} must be at least 1", e.safety));
        }
        if !(e.fd_step > 0.0 && e.fd_step < 0.5) {
            errs.push(format!("envelope.fd_step = {} outside (0, 0.5)", e.fd_step));
        }
        let t = &self.thresholds;
        positive(&mut errs, "thresholds.epsilon", t.epsilon);
        positive(&mut errs, "thresholds.delta", t.delta);
        positive(&mut errs, "thresholds.tau", t.tau);
        positive(&mut errs, "thresholds.zero", t.zero);
        let k = &self.kobayashi;
        positive(&mut errs, "kobayashi.r_start", k.r_start);
        at_least(&mut errs, "kobayashi.n_r", k.n_r, 8);
        at_least(&mut errs, "kobayashi.n_theta", k.n_theta, 8);
        if k.n_theta % 2 != 0 {
            errs.push(format!("kobayashi.n_theta = {} must be even", k.n_theta));
        }
        if k.p.iter().chain(&k.v).any(|x| !x.is_finite()) {
            errs.push("kobayashi.p and kobayashi.v must be finite".into());
        }
        let v = &self.verify;
        positive(&mut errs, "verify.radius", v.radius);
        at_least(&mut errs, "verify.n_r", v.n_r, 16);
        at_least(&mut errs, "verify.n_theta", v.n_theta, 16);
        if v.n_theta % 4 != 0 {
            errs.push(format!("verify.n_theta = {} must be a multiple of 4", v.n_theta));
        }
        at_least(&mut errs, "verify.fields", v.fields, 1);
        at_least(&mut errs, "verify.jets", v.jets, 1);
        if let Some(c) = self.system.coefficient {
            if c.iter().any(|x| !x.is_finite()) {
                errs.push("system.coefficient must be finite".into());
            }
        }

        let system = match self.build_system() {
            Ok(sys) => Some(sys),
            Err(e) => {
                errs.push(e);
                None
            }
        };
        let mut spec = None;
        if let Some(sys) = &system {
            for (name, want, got) in [("m", self.m, sys.m), ("mu", self.mu, sys.mu), ("nu", self.nu, sys.nu), ("n", self.n, sys.n)] {
                if let Some(w) = want {
                    if w != got {
                        errs.push(format!("{name} = {w} does not match system {} ({name} = {got})", sys.name));
                    }
                }
            }
            if command == "kobayashi" {
                if self.system.builtin != "harmonic_map" {
                    errs.push(format!("kobayashi needs system.builtin = harmonic_map, got {}", self.system.builtin));
                }
                if k.p.len() != sys.n || k.v.len() != sys.n {
                    errs.push(format!("kobayashi.p and kobayashi.v need {} components", sys.n));
                }
            }
            let mode = match self.jet.mode {
                ModeConfig::Vanishing => JetMode::Vanishing,
                ModeConfig::Polynomial => JetMode::Polynomial,
            };
            let mut js = JetSpec::new(sys.mu, sys.nu, sys.n, mode);
            for entry in &self.jet.entries {
                if entry.value.iter().flatten().any(|x| !x.is_finite()) {
                    errs.push(format!("jet entry ({}, {}) is not finite", entry.i, entry.j));
                }
                js = js.set(entry.i, entry.j, entry.value.iter().copied().map(complex).collect());
            }
            match js.validate() {
                Ok(()) => spec = Some(js),
                Err(e) => errs.push(e.to_string()),
            }
            if sys.holomorphic && mode == JetMode::Polynomial {
                let bad = self.jet.entries.iter().any(|e| e.j > 0 && e.value.iter().any(|v| v[0] != 0.0 || v[1] != 0.0));
                if bad {
                    errs.push("holomorphic systems take jet entries with j = 0 only".into());
                }
            }
        }
        let structure = system.as_ref().map(|sys| match self.solver.structure {
            StructureConfig::Auto => natural_structure(sys),
            StructureConfig::General => Structure::General,
            StructureConfig::Real => Structure::Real,
            StructureConfig::Holomorphic => Structure::Holomorphic,
        });
        if let (Some(sys), Some(st)) = (&system, structure) {
            if st == Structure::Real && !sys.real_valued {
                errs.push(format!("solver.structure = real needs a real system; {} is not", sys.name));
            }
            if st == Structure::Holomorphic && !sys.holomorphic {
                errs.push(format!("solver.structure = holomorphic needs a holomorphic system; {} is not", sys.name));
            }
        }
        match (errs.is_empty(), system, spec, structure) {
            (true, Some(system), Some(spec), Some(structure)) => Ok(Resolved { system, spec, structure }),
            _ => Err(ConfigErrors(errs)),
        }
    }

    fn build_system(&self) -> Result<RhsSystem, String> {
        let name = self.system.builtin.as_str();
        if !BUILTIN_NAMES.contains(&name) {
            return Err(format!(
                "system.builtin = {name:?} is not one of {}",
                BUILTIN_NAMES.join(", ")
            ));
        }
        let chart = match &self.system.chart {
            Some(c) if name == "harmonic_map" => Some(Arc::new(build_chart(c, self.n)?)),
            Some(_) => return Err(format!("system.chart only applies to harmonic_map, not {name}")),
            None => None,
        };
        let p = BuiltinParams {
            coefficient: self.system.coefficient.map(complex),
            mu: if name == "m_laplace" { self.system.order } else { self.mu },
            nu: self.nu,
            n: self.n,
            chart,
        };
        problems::builtin(name, &p).map_err(|e| format!("system: {e}"))
    }

    pub fn solve_options(&self, gamma: Option<f64>) -> SolveOptions {
        let s = &self.solver;
        SolveOptions {
            alpha: self.alpha,
            max_iter: s.max_iter,
            step_tol: s.step_tol,
            residual_tol: s.residual_tol,
            ratio_limit: s.ratio_limit,
            divergence_run: s.divergence_run,
            gamma,
            forced: s.forced,
            holomorphic_limit: s.holomorphic_limit,
        }
    }

    pub fn envelope_options(&self) -> EnvelopeOptions {
        let e = &self.envelope;
        EnvelopeOptions {
            samples: e.samples,
            safety: e.safety,
            seed: e.seed,
            fd_step: e.fd_step,
        }
    }

    pub fn thresholds(&self) -> Thresholds {
        let t = &self.thresholds;
        Thresholds {
            epsilon: t.epsilon,
            delta: t.delta,
            tau: t.tau,
            zero: t.zero,
        }
    }

    /// Ladder options; `fixed` sweeps `gamma` at `R = grid.radius`.
    pub fn sweep_options(&self, seed_norm: Option<f64>) -> SweepOptions {
        let w = &self.sweep;
        let (strategy, r_init) = match w.strategy {
            StrategyConfig::Local => (Strategy::Local, w.r_init),
            StrategyConfig::Global => (Strategy::Global, w.r_init),
            StrategyConfig::Fixed => (Strategy::Global, self.grid.radius.unwrap_or(w.r_init)),
        };
        SweepOptions {
            alpha: self.alpha,
            strategy,
            r_init,
            r_halvings: w.r_halvings,
            gamma_exponents: (w.gamma_min_exp, w.gamma_max_exp),
            envelope: self.envelope_options(),
            thresholds: self.thresholds(),
            seed_norm,
        }
    }

    pub fn kobayashi_options(&self) -> KobayashiOptions {
        let k = &self.kobayashi;
        KobayashiOptions {
            r_start: k.r_start,
            doublings: k.doublings,
            alpha: self.alpha,
            gamma_exponents: (self.sweep.gamma_min_exp, self.sweep.gamma_max_exp),
            envelope: self.envelope_options(),
            thresholds: self.thresholds(),
            n_r: k.n_r,
            n_t: k.n_theta,
            solve: SolveOptions {
                residual_tol: self.solver.residual_tol.max(1e-4),
                ..self.solve_options(None)
            },
        }
    }

    pub fn verify_options(&self) -> VerifyOptions {
        let v = &self.verify;
        VerifyOptions {
            radius: v.radius,
            n_r: v.n_r,
            n_t: v.n_theta,
            seed: v.seed,
            fields: v.fields,
            jets: v.jets,
            alpha: self.alpha,
        }
    }
}

fn build_chart(c: &ChartConfig, n: Option<usize>) -> Result<MetricChart, String> {
    if !(c.half > 0.0) {
        return Err(format!("system.chart.half = {} must be positive", c.half));
    }
    let chart = match c.kind.as_str() {
        "flat" => MetricChart::flat(n.unwrap_or(2), c.half),
        "sphere" => MetricChart::sphere(c.half),
        "table" => {
            let path = c.path.as_ref().ok_or("system.chart.kind = table needs system.chart.path")?;
            let text = std::fs::read_to_string(path).map_err(|e| format!("system.chart.path {}: {e}", path.display()))?;
            let name = path.file_stem().map_or("table".into(), |s| s.to_string_lossy().into_owned());
            MetricChart::from_csv(name, &text)
        }
        other => return Err(format!("system.chart.kind = {other:?} is not one of flat, sphere, table")),
    };
    chart.map_err(|e| format!("system.chart: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_resolve() {
        let r = RunConfig::default().resolve("solve").unwrap();
        assert_eq!(r.system.name, "conj_z");
    }

    #[test]
    fn all_errors_are_listed() {
        let cfg: RunConfig = serde_json::from_str(
            r#"{"alpha": 1.5, "grid": {"n_r": 2, "n_theta": 9}, "solver": {"ratio_limit": 2.0}}"#,
        )
        .unwrap();
        let errs = cfg.resolve("solve").err().unwrap().0;
        assert!(errs.iter().any(|e| e == "alpha = 1.5 outside (0, 1)"));
        assert!(errs.iter().any(|e| e.starts_with("grid.n_r")));
        assert!(errs.iter().any(|e| e.starts_with("grid.n_theta = 9 must be even")));
        assert!(errs.iter().any(|e| e.starts_with("solver.ratio_limit")));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"alpah": 0.5}"#).is_err());
    }
}
