//! Upper bounds for the harmonic-map Kobayashi metric from certified disks.
//!
//! A disk of radius `R` is certified when the ledger finds a feasible `gamma`
//! at that `R` and the Picard iteration converges there. `1 / R` for the
//! largest certified `R` bounds `K(p, v)` from above; it is never the metric
//! itself.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::Result;
use crate::grid::{fmt_f64, DiscGrid};
use crate::ledger::{constants_report, Binding, EnvelopeOptions, SweepOptions, Thresholds};
use crate::solver::{effective_system, solve_real, SolveOptions, SolveReport, Termination};
use crate::system::{JetMode, JetSpec};
use crate::C64;

use super::chart::MetricChart;
use super::harmonic_map;

/// `u(0) = p`, `d_x u(0) = v`, so `d u(0) = dbar u(0) = v / 2`.
pub fn harmonic_jet(p: &[f64], v: &[f64]) -> JetSpec {
    let n = p.len();
    let c = |x: &[f64], s: f64| x.iter().map(|&t| C64::new(t * s, 0.0)).collect::<Vec<_>>();
    JetSpec::new(1, 1, n, JetMode::Polynomial)
        .set(0, 0, c(p, 1.0))
        .set(1, 0, c(v, 0.5))
        .set(0, 1, c(v, 0.5))
        .set(2, 0, vec![C64::new(0.0, 0.0); n])
        .set(0, 2, vec![C64::new(0.0, 0.0); n])
}

#[derive(Clone, Debug)]
pub struct KobayashiOptions {
    pub r_start: f64,
    pub doublings: usize,
    pub alpha: f64,
    pub gamma_exponents: (i32, i32),
    pub envelope: EnvelopeOptions,
    pub thresholds: Thresholds,
    pub n_r: usize,
    pub n_t: usize,
    pub solve: SolveOptions,
}

impl Default for KobayashiOptions {
    fn default() -> Self {
        Self {
            r_start: 1e-9,
            doublings: 40,
            alpha: 0.5,
            gamma_exponents: (-6, 6),
            envelope: EnvelopeOptions::default(),
            thresholds: Thresholds::default(),
            n_r: 16,
            n_t: 32,
            solve: SolveOptions {
                residual_tol: 1e-4,
                ..SolveOptions::default()
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum RowVerdict {
    Certified,
    Infeasible(Binding),
    Failed(Termination),
}

impl std::fmt::Display for RowVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RowVerdict::Certified => write!(f, "certified"),
            RowVerdict::Infeasible(b) => write!(f, "infeasible ({b})"),
            RowVerdict::Failed(t) => write!(f, "{t}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct LadderRow {
    pub r: f64,
    pub gamma: Option<f64>,
    pub verdict: RowVerdict,
}

#[derive(Clone, Debug)]
pub struct KobayashiReport {
    pub chart: String,
    pub rows: Vec<LadderRow>,
    pub r_best: Option<f64>,
    pub best: Option<SolveReport>,
}

impl KobayashiReport {
    /// `1 / R_best`, an upper bound on `K(p, v)`.
    pub fn bound(&self) -> Option<f64> {
        self.r_best.map(|r| 1.0 / r)
    }

    /// CSV `R,gamma,bound,verdict`; `bound` is filled on certified rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("R,gamma,bound,verdict\n");
        for row in &self.rows {
            let g = row.gamma.map(fmt_f64).unwrap_or_default();
            let b = if row.verdict == RowVerdict::Certified { fmt_f64(1.0 / row.r) } else { String::new() };
            let _ = writeln!(s, "{},{g},{b},{}", fmt_f64(row.r), row.verdict.to_string().replace(',', ";"));
        }
        s
    }

    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "chart = {}", self.chart);
        let _ = writeln!(s, "ladder_rows = {}", self.rows.len());
        match (self.r_best, self.bound()) {
            (Some(r), Some(b)) => {
                let _ = writeln!(s, "R_best = {}", fmt_f64(r));
                let _ = writeln!(s, "upper_bound = {}", fmt_f64(b));
                s.push_str("note = upper bound on K(p, v), not its value\n");
            }
            _ => s.push_str("verdict = no certified disk\n"),
        }
        if let Some(last) = self.rows.last().filter(|r| r.verdict != RowVerdict::Certified) {
            let _ = writeln!(s, "stopped_at_R = {}", fmt_f64(last.r));
            let _ = writeln!(s, "stop_reason = {}", last.verdict);
        }
        s
    }
}

/// Walks the doubling ladder until the first failure.
pub fn kobayashi_upper_bound(chart: Arc<MetricChart>, p: &[f64], v: &[f64], opts: &KobayashiOptions) -> Result<KobayashiReport> {
    let name = chart.name.clone();
    let system = harmonic_map(chart)?;
    let spec = harmonic_jet(p, v);
    let ledger_system = effective_system(&system, &spec)?;
    let (lo, hi) = opts.gamma_exponents;
    let sweep = SweepOptions {
        alpha: opts.alpha,
        envelope: opts.envelope.clone(),
        thresholds: opts.thresholds.clone(),
        ..SweepOptions::default()
    };
    let mut rows = Vec::new();
    let mut best = None;
    let mut r_best = None;
    for i in 0..=opts.doublings {
        let r = opts.r_start * 2f64.powi(i as i32);
        let mut chosen = None;
        let mut binding = Binding::Delta;
        for j in lo..=hi {
            let g = 10f64.powi(j);
            let rep = constants_report(&ledger_system, r, g, &sweep)?;
            if rep.feasible {
                chosen = Some(g);
                break;
            }
            if let Some(b) = rep.binding {
                binding = b;
            }
        }
        let Some(gamma) = chosen else {
            rows.push(LadderRow {
                r,
                gamma: None,
                verdict: RowVerdict::Infeasible(binding),
            });
            break;
        };
        let grid = DiscGrid::new(r, opts.n_r, opts.n_t)?;
        let so = SolveOptions {
            gamma: Some(gamma),
            ..opts.solve.clone()
        };
        let rep = solve_real(&system, &spec, &grid, &so)?;
        if rep.converged() {
            rows.push(LadderRow {
                r,
                gamma: Some(gamma),
                verdict: RowVerdict::Certified,
            });
            r_best = Some(r);
            best = Some(rep);
        } else {
            rows.push(LadderRow {
                r,
                gamma: Some(gamma),
                verdict: RowVerdict::Failed(rep.termination.clone()),
            });
            break;
        }
    }
    Ok(KobayashiReport {
        chart: name,
        rows,
        r_best,
        best,
    })
}
