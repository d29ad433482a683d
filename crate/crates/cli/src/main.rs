//! `hypbq`: batch runner for the hyperbolic Boussinesq experiments.
//!
//! Exit status is 0 when every acceptance check passes, 2 when one fails
//! and 1 on any error.

mod config;
mod output;
mod run;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use config::ExperimentConfig;
use output::{write_all, Outcome};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "hypbq", version, about = "Mild-solution experiments for the Boussinesq system on H^2 / H^3")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment config
    #[arg(long)]
    config: PathBuf,
    /// output directory (default: experiment.output_dir)
    #[arg(long)]
    out: Option<PathBuf>,
    /// dotted config override, e.g. solver.rho=0.05
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct ConstantsArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long = "delta-d")]
    delta_d: Option<f64>,
    #[arg(long = "C")]
    c: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long = "h-norm", default_value_t = 0.0)]
    h_norm: f64,
}

#[derive(Subcommand)]
enum Cmd {
    /// Picard solve of the configured problem
    Simulate(RunArgs),
    /// dispersive and smoothing estimate suite
    VerifySemigroup(RunArgs),
    /// perturbation decay experiment
    Stability(RunArgs),
    /// periodic orbit from the time-T map
    Periodic(RunArgs),
    /// closed-form constants
    Constants(ConstantsArgs),
}

fn execute(cli: Cli) -> Result<bool> {
    let (name, outcome, dir, echo) = match cli.cmd {
        Cmd::Constants(a) => {
            let cfg = ExperimentConfig::load(a.config.as_deref(), &a.overrides)?;
            let sg = cfg.semigroup_config();
            let d = a.d.unwrap_or(cfg.manifold.d);
            let dm1 = d as f64 - 1.0;
            let default_delta = if a.config.is_some() || a.d.is_none() { sg.delta_d } else { 0.25 * dm1 * dm1 };
            let inp = run::ConstantsInput {
                d,
                p: a.p.unwrap_or(cfg.solver.p),
                delta_d: a.delta_d.unwrap_or(default_delta),
                c: a.c.unwrap_or(sg.c),
                rho: a.rho.unwrap_or(cfg.solver.rho),
                h_norm: a.h_norm,
            };
            let out = run::constants(&inp)?;
            println!("{}", serde_json::to_string_pretty(&out.result)?);
            ("constants", out, cfg.output_dir(a.out.as_deref()), serde_json::to_value(&inp)?)
        }
        Cmd::Simulate(a) => with_config("simulate", a, run::simulate)?,
        Cmd::VerifySemigroup(a) => with_config("verify-semigroup", a, run::verify_semigroup_cmd)?,
        Cmd::Stability(a) => with_config("stability", a, run::stability)?,
        Cmd::Periodic(a) => with_config("periodic", a, run::periodic)?,
    };
    write_all(&dir, name, &echo, &outcome)?;
    for c in &outcome.checks {
        eprintln!(
            "{} {}: {:.6e} (threshold {:.3e})",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.threshold
        );
    }
    eprintln!(
        "{name}: {} -> {}",
        if outcome.passed() { "passed" } else { "FAILED" },
        dir.join("report.json").display()
    );
    Ok(outcome.passed())
}

fn with_config(
    name: &'static str,
    a: RunArgs,
    f: fn(&ExperimentConfig) -> Result<Outcome>,
) -> Result<(&'static str, Outcome, PathBuf, serde_json::Value)> {
    let cfg = ExperimentConfig::load(Some(&a.config), &a.overrides)?;
    let out = f(&cfg)?;
    Ok((name, out, cfg.output_dir(a.out.as_deref()), serde_json::to_value(&cfg)?))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
