//! `dfcl`: chain ladder reserving from the command line.
//!
//! Every subcommand reads the same flat configuration (`--config`, then
//! `--set KEY=VALUE` overrides, then the dedicated flags) and writes CSV and
//! JSON reports plus `run.json` into the output directory.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::output::Outputs;

#[derive(Parser)]
#[command(name = "dfcl", version, about = "Distribution-free chain ladder reserving")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Configuration file of `key = value` lines.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override one configuration key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Claims triangle CSV.
    #[arg(long, short)]
    input: Option<PathBuf>,
    /// `cumulative` or `incremental`.
    #[arg(long)]
    layout: Option<String>,
    /// Multiplier applied to every claim on load.
    #[arg(long)]
    scale: Option<f64>,
    /// Output directory.
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Clone)]
struct WithChains {
    #[command(flatten)]
    common: Common,
    /// Chain dump written by `abc`; repeatable.
    #[arg(long = "chain")]
    chains: Vec<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Classical factors, variances, completed triangle and reserves.
    Fit(Common),
    /// Residual bootstrap and the frequentist MSEP.
    Bootstrap(Common),
    /// MCMC-ABC chains, posterior summaries, Bayesian MSEP and VaR.
    Abc(Common),
    /// ACF, Geweke, Gelman-Rubin and spectra of chain dumps.
    Diagnose(WithChains),
    /// Posterior of one coordinate across a list of tolerance floors.
    ToleranceStudy(Common),
    /// Simulate a triangle with constant factors and deviations.
    Generate(Common),
    /// Reserves under the classical factors, plus posterior point
    /// estimates when a chain is given.
    Reserves(WithChains),
    /// MSEP for the configured route(s).
    Msep(WithChains),
}

fn build_config(c: &Common) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &c.config {
        cfg.apply_file(path)?;
    }
    for pair in &c.set {
        cfg.set_pair(pair)?;
    }
    if let Some(p) = &c.input {
        cfg.input = Some(p.clone());
    }
    if let Some(l) = &c.layout {
        cfg.set("layout", l)?;
    }
    if let Some(s) = c.scale {
        cfg.scale = s;
    }
    if let Some(o) = &c.out {
        cfg.out = o.clone();
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<Vec<String>> {
    let (name, common, chains) = match &cli.command {
        Command::Fit(c) => ("fit", c, &[][..]),
        Command::Bootstrap(c) => ("bootstrap", c, &[][..]),
        Command::Abc(c) => ("abc", c, &[][..]),
        Command::Diagnose(w) => ("diagnose", &w.common, &w.chains[..]),
        Command::ToleranceStudy(c) => ("tolerance-study", c, &[][..]),
        Command::Generate(c) => ("generate", c, &[][..]),
        Command::Reserves(w) => ("reserves", &w.common, &w.chains[..]),
        Command::Msep(w) => ("msep", &w.common, &w.chains[..]),
    };
    let cfg = build_config(common)?;
    let mut out = Outputs::new(commands::out_dir(&cfg))?;
    match &cli.command {
        Command::Fit(_) => commands::fit(&cfg, &mut out)?,
        Command::Bootstrap(_) => commands::bootstrap(&cfg, &mut out)?,
        Command::Abc(_) => commands::abc(&cfg, &mut out)?,
        Command::Diagnose(_) => commands::diagnose_cmd(&cfg, chains, &mut out)?,
        Command::ToleranceStudy(_) => commands::tolerance(&cfg, &mut out)?,
        Command::Generate(_) => commands::generate_cmd(&cfg, &mut out)?,
        Command::Reserves(_) => commands::reserves(&cfg, chains, &mut out)?,
        Command::Msep(_) => commands::msep(&cfg, chains, &mut out)?,
    }
    let seeds = match name {
        "abc" => cfg.chain_seeds(),
        _ => vec![cfg.seed],
    };
    out.finish(name, &cfg, seeds)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(files) => {
            for f in files {
                println!("{f}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
