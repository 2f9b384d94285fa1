use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use mcflab_core::lab::{list_scenarios, parse_config_with, run_pipeline, Operation};

#[derive(Parser)]
#[command(name = "mcflab", version, about = "Certify and flow minimal submanifolds in preset Riemannian charts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Strong-stability certificate of the reference submanifold
    CertifyStability(RunArgs),
    /// Squared-distance barrier certificate on the tubular neighbourhood
    CertifyBarrier(RunArgs),
    /// Mean curvature flow from the scenario's initial datum, with monitors
    Flow(RunArgs),
    /// Multi-seed search for other stationary limits inside the tube
    Uniqueness(RunArgs),
    /// Every stage the scenario supports
    All(RunArgs),
    /// Registered scenarios
    List,
}

#[derive(Args)]
struct RunArgs {
    /// TOML config file
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output root; each run writes to <out>/<scenario>/<op>-seed<seed>
    #[arg(long)]
    out: Option<PathBuf>,
    /// section.key=value, applied after the config file (repeatable)
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn execute(op: Operation, args: RunArgs) -> Result<bool> {
    let text = match &args.config {
        Some(path) => std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
        None => String::new(),
    };
    let mut overrides = args.overrides.clone();
    if let Some(s) = &args.scenario {
        overrides.push(format!("run.scenario={s}"));
    }
    overrides.push(format!("run.op={}", op.label()));
    let mut cfg = parse_config_with(&text, &overrides).context("invalid configuration")?;
    if let Some(seed) = args.seed {
        cfg.rng_seed = seed;
    }
    if let Some(out) = args.out {
        cfg.out_dir = out;
    }
    let result = run_pipeline(&cfg)?;
    print!("{}", result.report.to_text());
    println!("outputs: {}", result.dir.display());
    Ok(result.report.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (op, args) = match cli.command {
        Command::List => {
            for (name, description) in list_scenarios() {
                println!("{name:<28} {description}");
            }
            return ExitCode::SUCCESS;
        }
        Command::CertifyStability(a) => (Operation::CertifyStability, a),
        Command::CertifyBarrier(a) => (Operation::CertifyBarrier, a),
        Command::Flow(a) => (Operation::Flow, a),
        Command::Uniqueness(a) => (Operation::Uniqueness, a),
        Command::All(a) => (Operation::All, a),
    };
    match execute(op, args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
