mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Outcome, DEMOS};
use config::{ConfigErrors, RunConfig};
use output::OutDir;

/// Cauchy-Green disk solver: Picard iteration, contraction constants, self-checks.
#[derive(Parser)]
#[command(name = "cgdisk", version)]
struct Cli {
    /// JSON run configuration; defaults apply to every missing field.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output` in the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; 0 picks one per core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep for a certified disk, then iterate to the fixed point.
    Solve,
    /// Contraction ledger at a fixed (R, gamma) or at the sweep's choice.
    Constants,
    /// Ledger over the whole (R, gamma) ladder as CSV.
    Region,
    /// Operator identities and norm inequalities with measured errors.
    Verify,
    /// Upper bound on the harmonic-map Kobayashi metric.
    Kobayashi,
    /// Runs a bundled example.
    Demo {
        /// One of: conj_z, exp, liouville, mizohata, flat_harmonic, m_laplace, sphere.
        name: String,
    },
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global()?;
    }
    let (cfg, command) = match &cli.command {
        Command::Demo { name } => {
            let Some((cfg, command)) = commands::demo(name) else {
                anyhow::bail!("unknown demo {name:?} (known: {})", DEMOS.join(", "));
            };
            (cfg, command)
        }
        other => {
            let cfg = match &cli.config {
                Some(p) => config::load(p)?,
                None => RunConfig::default(),
            };
            let command = match other {
                Command::Solve => "solve",
                Command::Constants => "constants",
                Command::Region => "region",
                Command::Verify => "verify",
                Command::Kobayashi => "kobayashi",
                Command::Demo { .. } => unreachable!(),
            };
            (cfg, command)
        }
    };
    let root = cli.out.clone().or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("cgdisk-out"));
    let out = OutDir::create(&root)?;
    match command {
        "solve" => commands::solve(&cfg, &out),
        "constants" => commands::constants(&cfg, &out),
        "region" => commands::region_cmd(&cfg, &out),
        "verify" => commands::verify_cmd(&cfg, &out),
        _ => commands::kobayashi(&cfg, &out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::Negative) => ExitCode::from(2),
        Err(e) => {
            match e.downcast_ref::<ConfigErrors>() {
                Some(list) => eprint!("{list}"),
                None => eprintln!("error: {e:#}"),
            }
            ExitCode::from(1)
        }
    }
}
