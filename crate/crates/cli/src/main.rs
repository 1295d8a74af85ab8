use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use epiwave_cli::commands;
use epiwave_cli::config::RunConfig;
use epiwave_cli::output::{resolve_out_dir, OutDir};
use epiwave_cli::CliError;

/// Spatial vector-borne epidemic model: thresholds, wave speeds, simulation.
#[derive(Parser)]
#[command(name = "epiwave", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` config file (or a manifest.csv from a previous run).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides EPIWAVE_OUT and out.dir.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Threshold, equilibria and minimal wave speed.
    Analyze(Common),
    /// Sample the dispersion curve on a log grid.
    Dispersion {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.01)]
        lambda_min: f64,
        #[arg(long, default_value_t = 10.0)]
        lambda_max: f64,
        #[arg(long, default_value_t = 500)]
        samples: usize,
    },
    /// Run the reaction-diffusion system and write snapshots and reports.
    Simulate(Common),
    /// Build and check the super/sub-solution pair for a wave speed.
    Certify {
        #[command(flatten)]
        common: Common,
        /// Wave speed; must exceed c*.
        #[arg(long = "c")]
        c: f64,
    },
}

fn setup(common: &Common) -> Result<(RunConfig, OutDir), CliError> {
    let cfg = RunConfig::load(&common.config)?;
    let dir = resolve_out_dir(common.out.as_deref(), cfg.out_dir.as_deref());
    let out = OutDir::create(dir)?;
    Ok((cfg, out))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (lines, ok) = match &cli.command {
        Command::Analyze(common) => {
            let (cfg, out) = setup(common)?;
            (commands::analyze(&cfg, &out)?.lines, true)
        }
        Command::Dispersion { common, lambda_min, lambda_max, samples } => {
            let (cfg, out) = setup(common)?;
            (commands::dispersion(&cfg, &out, *lambda_min, *lambda_max, *samples)?.lines, true)
        }
        Command::Simulate(common) => {
            let (cfg, out) = setup(common)?;
            (commands::simulate(&cfg, &out)?.lines, true)
        }
        Command::Certify { common, c } => {
            let (cfg, out) = setup(common)?;
            let r = commands::certify(&cfg, &out, *c)?;
            (r.output.lines, r.report.all_ok())
        }
    };
    for l in lines {
        println!("{l}");
    }
    if ok {
        Ok(())
    } else {
        Err(CliError::new(1, "certificate check failed: some residual is below -1e-10"))
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("epiwave: {e}");
            ExitCode::from(u8::try_from(e.code).unwrap_or(1))
        }
    }
}
