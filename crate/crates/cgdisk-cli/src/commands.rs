use std::fmt::Write as _;

use anyhow::Result;
use cgdisk::grid::{fmt_f64, DiscGrid};
use cgdisk::ledger::{check_theorem_conditions, constants_report, feasibility_search, region, region_csv};
use cgdisk::problems::{kobayashi_upper_bound, MetricChart};
use cgdisk::solver::{effective_system, solve_with};
use cgdisk::system::JetSpec;
use cgdisk::verify;

use crate::config::{ChartConfig, JetEntry, ModeConfig, Resolved, RunConfig, StrategyConfig};
use crate::output::OutDir;

/// Exit status of a command that ran to completion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// Diverged, infeasible, escaped, out of iterations, no certified disk.
    Negative,
}

fn echo(cfg: &RunConfig, command: &str, out: &OutDir) -> Result<()> {
    let mut cfg = cfg.clone();
    cfg.command = Some(command.into());
    out.write("config.resolved.json", &(serde_json::to_string_pretty(&cfg)? + "\n"))
}

fn level_m_seed_norm(spec: &JetSpec) -> f64 {
    spec.values
        .iter()
        .filter(|(&(i, j), _)| i + j == spec.m)
        .flat_map(|(_, v)| v.iter().map(|x| x.norm()))
        .fold(0.0, f64::max)
}

fn prepare(cfg: &RunConfig, command: &str, out: &OutDir) -> Result<Resolved> {
    let r = cfg.resolve(command)?;
    echo(cfg, command, out)?;
    Ok(r)
}

pub fn solve(cfg: &RunConfig, out: &OutDir) -> Result<Outcome> {
    let r = prepare(cfg, "solve", out)?;
    let ledger_system = effective_system(&r.system, &r.spec)?;
    let sweep = cfg.sweep_options(Some(level_m_seed_norm(&r.spec)));
    let mut report = String::new();
    let (radius, gamma, constants) = match cfg.sweep.strategy {
        StrategyConfig::Fixed => {
            let radius = cfg.grid.radius.expect("validated");
            let constants = match cfg.sweep.gamma {
                Some(g) => Some(constants_report(&ledger_system, radius, g, &sweep)?),
                None => None,
            };
            (radius, cfg.sweep.gamma, constants)
        }
        _ => {
            let f = feasibility_search(&ledger_system, &sweep)?;
            out.write("sweep.csv", &region_csv(&f.points))?;
            match f.chosen {
                Some((radius, g)) => (radius, Some(g), Some(f.report)),
                None => {
                    let _ = writeln!(report, "system = {}", r.system.name);
                    report.push_str("termination = infeasible\n");
                    report.push_str("note = no (R, gamma) on the ladder passes the ledger; closest point follows\n");
                    report.push_str("# constants\n");
                    report.push_str(&f.report.to_kv());
                    out.write("report.txt", &report)?;
                    print!("{report}");
                    return Ok(Outcome::Negative);
                }
            }
        }
    };
    let grid = DiscGrid::new(radius, cfg.grid.n_r, cfg.grid.n_theta)?;
    let rep = solve_with(&r.system, &r.spec, &grid, r.structure, &cfg.solve_options(gamma))?;
    report.push_str(&rep.to_kv());
    match constants {
        Some(c) => {
            report.push_str("# constants\n");
            report.push_str(&c.to_kv());
        }
        None => {
            report.push_str("# conditions\n");
            report.push_str(&check_theorem_conditions(&r.system, &cfg.thresholds()).to_kv());
        }
    }
    out.write("report.txt", &report)?;
    out.write("convergence.csv", &rep.convergence_csv())?;
    for (name, csv) in rep.field_csvs() {
        out.write(&format!("fields/{name}"), &csv)?;
    }
    print!("{report}");
    Ok(if rep.converged() { Outcome::Success } else { Outcome::Negative })
}

pub fn constants(cfg: &RunConfig, out: &OutDir) -> Result<Outcome> {
    let r = prepare(cfg, "constants", out)?;
    let ledger_system = effective_system(&r.system, &r.spec)?;
    let sweep = cfg.sweep_options(Some(level_m_seed_norm(&r.spec)));
    let rep = match (cfg.sweep.strategy, cfg.sweep.gamma) {
        (StrategyConfig::Fixed, Some(g)) => constants_report(&ledger_system, cfg.grid.radius.expect("validated"), g, &sweep)?,
        _ => feasibility_search(&ledger_system, &sweep)?.report,
    };
    let text = rep.to_kv();
    out.write("constants.txt", &text)?;
    print!("{text}");
    Ok(if rep.feasible { Outcome::Success } else { Outcome::Negative })
}

pub fn region_cmd(cfg: &RunConfig, out: &OutDir) -> Result<Outcome> {
    let r = prepare(cfg, "region", out)?;
    let ledger_system = effective_system(&r.system, &r.spec)?;
    let points = region(&ledger_system, &cfg.sweep_options(Some(level_m_seed_norm(&r.spec))))?;
    out.write("region.csv", &region_csv(&points))?;
    let feasible = points.iter().filter(|p| p.feasible).count();
    println!("points = {} feasible = {feasible}", points.len());
    Ok(if feasible > 0 { Outcome::Success } else { Outcome::Negative })
}

pub fn verify_cmd(cfg: &RunConfig, out: &OutDir) -> Result<Outcome> {
    prepare(cfg, "verify", out)?;
    let rep = verify::run(&cfg.verify_options())?;
    let log = rep.log();
    out.write("verify.log", &log)?;
    print!("{log}");
    if rep.passed() {
        Ok(Outcome::Success)
    } else {
        anyhow::bail!("{} identity check(s) failed", rep.checks.iter().filter(|c| !c.pass).count())
    }
}

pub fn kobayashi(cfg: &RunConfig, out: &OutDir) -> Result<Outcome> {
    prepare(cfg, "kobayashi", out)?;
    let chart_cfg = cfg.system.chart.clone().unwrap_or_default();
    let chart = std::sync::Arc::new(match chart_cfg.kind.as_str() {
        "sphere" => MetricChart::sphere(chart_cfg.half)?,
        "table" => {
            let path = chart_cfg.path.as_ref().expect("validated");
            MetricChart::from_csv(
                path.file_stem().map_or("table".into(), |s| s.to_string_lossy().into_owned()),
                &std::fs::read_to_string(path)?,
            )?
        }
        _ => MetricChart::flat(cfg.n.unwrap_or(2), chart_cfg.half)?,
    });
    let k = &cfg.kobayashi;
    let rep = kobayashi_upper_bound(chart, &k.p, &k.v, &cfg.kobayashi_options())?;
    out.write("kobayashi.csv", &rep.to_csv())?;
    let mut text = rep.to_kv();
    let _ = writeln!(text, "p = {}", k.p.iter().map(|&x| fmt_f64(x)).collect::<Vec<_>>().join(" "));
    let _ = writeln!(text, "v = {}", k.v.iter().map(|&x| fmt_f64(x)).collect::<Vec<_>>().join(" "));
    out.write("kobayashi.txt", &text)?;
    print!("{text}");
    Ok(if rep.r_best.is_some() { Outcome::Success } else { Outcome::Negative })
}

pub const DEMOS: &[&str] = &["conj_z", "exp", "liouville", "mizohata", "flat_harmonic", "m_laplace", "sphere"];

fn real(x: f64) -> [f64; 2] {
    [x, 0.0]
}

/// Preset config and the command it runs.
pub fn demo(name: &str) -> Option<(RunConfig, &'static str)> {
    let mut c = RunConfig::default();
    let entry = |i, j, value: Vec<[f64; 2]>| JetEntry { i, j, value };
    let command = match name {
        "conj_z" => {
            c.jet.entries = vec![entry(1, 0, vec![real(1.0)])];
            "solve"
        }
        "exp" => {
            c.system.builtin = "holo_linear".into();
            c.jet.mode = ModeConfig::Polynomial;
            c.jet.entries = vec![entry(0, 0, vec![real(1.0)])];
            c.sweep.strategy = StrategyConfig::Fixed;
            c.grid.radius = Some(0.5);
            "solve"
        }
        "liouville" => {
            c.system.builtin = "liouville".into();
            c.solver.residual_tol = 1e-4;
            "solve"
        }
        "mizohata" => {
            c.system.builtin = "mizohata".into();
            c.jet.entries = vec![entry(1, 0, vec![real(1.0)])];
            "solve"
        }
        "flat_harmonic" => {
            c.system.builtin = "harmonic_map".into();
            c.jet.mode = ModeConfig::Polynomial;
            c.jet.entries = vec![
                entry(0, 0, vec![real(0.3), real(-0.2)]),
                entry(1, 0, vec![real(0.5), real(0.25)]),
                entry(0, 1, vec![real(0.5), real(0.25)]),
            ];
            c.sweep.strategy = StrategyConfig::Fixed;
            c.grid.radius = Some(0.5);
            "solve"
        }
        "m_laplace" => {
            c.system.builtin = "m_laplace".into();
            c.system.order = Some(2);
            c.jet.mode = ModeConfig::Polynomial;
            c.jet.entries = vec![
                entry(3, 0, vec![real(6.0)]),
                entry(0, 3, vec![real(6.0)]),
                entry(2, 1, vec![real(2.0)]),
                entry(1, 2, vec![real(2.0)]),
            ];
            "solve"
        }
        "sphere" => {
            c.system.builtin = "harmonic_map".into();
            c.system.chart = Some(ChartConfig {
                kind: "sphere".into(),
                ..ChartConfig::default()
            });
            "kobayashi"
        }
        _ => return None,
    };
    Some((c, command))
}
