//! `eventum`: verification suites and experiment drivers.
//!
//! Exit codes: 0 when every check passes, 1 when a numerical check fails,
//! 2 for usage or configuration errors.

mod commands;
mod config;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use config::{resolve, ExperimentConfig, Overrides, UsageError};
use report::{Output, Report};

#[derive(Debug, Parser)]
#[command(name = "eventum", version, about = "Minkowski-Hilbert dilation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Debug, Args)]
struct Global {
    /// JSON experiment configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Directory for reports and tables.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Worker threads; affects wall time only.
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,
    #[arg(long, global = true, value_name = "FLOAT")]
    tol: Option<f64>,
    #[arg(long, global = true, value_name = "FLOAT")]
    nu: Option<f64>,
    #[arg(long, global = true, value_name = "INT")]
    grid_n: Option<usize>,
    #[arg(long, global = true, value_name = "INT")]
    nmax: Option<usize>,
    #[arg(long, global = true, value_name = "INT")]
    mc_samples: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// HP table, homomorphism, pseudo-adjoint and pseudo-unitarity suites.
    VerifyAlgebra,
    /// Error against grid width for the projected Schrödinger and damped dynamics.
    Dilate,
    /// Monte-Carlo measurement trajectories against the master equation.
    Trajectories,
    /// Duhamel solvers against the direct chronological product.
    Duhamel,
    /// Lorentz-boost identities.
    Boost,
}

fn emit<T: Serialize>(out: &Output, name: &str, report: &Report<T>) -> anyhow::Result<bool> {
    let json = report.to_json()?;
    out.write(name, json.as_bytes())?;
    std::io::stdout().write_all(json.as_bytes())?;
    for c in report.checks.iter().filter(|c| !c.pass) {
        log::warn!("{} failed: {:e} > {:e}", c.name, c.value, c.bound);
    }
    Ok(report.all_pass())
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let g = cli.global;
    if g.workers == Some(0) {
        return Err(config::usage("--workers must be at least 1"));
    }
    let overrides = Overrides {
        out: g.out,
        seed: g.seed,
        tol: g.tol,
        nu: g.nu,
        grid_n: g.grid_n,
        n_max: g.nmax,
        mc_samples: g.mc_samples,
    };
    let cfg: ExperimentConfig = resolve(g.config.as_deref(), &overrides)?;
    let out = Output::new(cfg.out.as_deref())?;
    match cli.command {
        Command::VerifyAlgebra => emit(&out, "verify-algebra.json", &commands::algebra::run(&cfg)?),
        Command::Dilate => {
            let (report, table) = commands::dilate::run(&cfg)?;
            out.write("dilate.csv", table.as_bytes())?;
            emit(&out, "dilate.json", &report)
        }
        Command::Trajectories => {
            let (report, files) = commands::trajectories::run(&cfg, g.workers)?;
            out.write("trajectories.jsonl", &files.records)?;
            out.write("summary.csv", files.summary.as_bytes())?;
            emit(&out, "trajectories.json", &report)
        }
        Command::Duhamel => emit(&out, "duhamel.json", &commands::duhamel::run(&cfg)?),
        Command::Boost => emit(&out, "boost.json", &commands::boost::run(&cfg)?),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("EVENTUM_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.chain().any(|c| c.is::<UsageError>()) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
