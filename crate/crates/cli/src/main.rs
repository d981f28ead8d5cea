//! `drought`: renewable energy drought analysis from the command line.
//!
//! Exit codes: 0 on success, 1 for invalid configuration or input data, 2
//! for any other failure.

mod config;
mod output;
mod pipeline;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use config::{Invalid, Overrides, Plan, RunConfig};
use output::Staging;

#[derive(Parser)]
#[command(name = "drought", version, about = "Detect and characterise renewable energy droughts")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Comma-separated regions to analyse.
    #[arg(long, global = true, value_delimiter = ',', value_name = "LIST")]
    regions: Option<Vec<String>>,

    /// Comma-separated relative threshold levels.
    #[arg(long, global = true, value_delimiter = ',', value_name = "LIST")]
    taus: Option<Vec<f64>>,

    /// Worker threads (0 = all cores).
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,

    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Check the configuration and input files without writing anything.
    Validate,
    /// Write event catalogs for every series and threshold level.
    Detect,
    /// Frequency, return-period and maximum-duration tables from catalogs.
    Stats,
    /// Portfolio and balancing effects from catalogs.
    Effects,
    /// Drought mass scores of portfolio series from catalogs.
    Mass,
    /// Storage drawdown and its coincidence with the top drought mass event.
    Storage,
    /// Every step above in one run.
    All,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Detect => "detect",
            Command::Stats => "stats",
            Command::Effects => "effects",
            Command::Mass => "mass",
            Command::Storage => "storage",
            Command::All => "all",
        }
    }
}

fn plan(cli: &Cli) -> Result<Plan> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let from = config.apply(Overrides {
        regions: cli.regions.clone(),
        taus: cli.taus.clone(),
        jobs: cli.jobs,
        out: cli.out.clone(),
    });
    Ok(config.validate(from)?)
}

fn run(cli: &Cli) -> Result<()> {
    let plan = plan(cli)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(plan.jobs)
        .build_global()
        .context("cannot start the worker pool")?;

    if cli.command == Command::Validate {
        let inputs = pipeline::load_inputs(&plan)?;
        let targets = pipeline::build_targets(&plan, &inputs, false)?;
        println!(
            "ok: {} series over {} years, {} analysis targets, {} threshold levels",
            inputs.series.len(),
            inputs.axis.n_years(),
            targets.len(),
            plan.taus.len()
        );
        return Ok(());
    }
    if matches!(cli.command, Command::Mass | Command::Storage | Command::All) {
        plan.require_mass_levels()?;
    }

    std::fs::create_dir_all(&plan.out)
        .with_context(|| format!("cannot create {}", plan.out.display()))?;
    let mut staging = Staging::new(&plan.out)?;
    match cli.command {
        Command::Validate => unreachable!(),
        Command::Detect => {
            let inputs = pipeline::load_inputs(&plan)?;
            pipeline::detect(&plan, &inputs, &mut staging)?;
        }
        Command::Stats => {
            let detected = pipeline::load_detected(&plan, &plan.out)?;
            pipeline::stats(&detected, &staging)?;
        }
        Command::Effects => {
            let detected = pipeline::load_detected(&plan, &plan.out)?;
            pipeline::effects(&plan, &detected, &staging)?;
        }
        Command::Mass => {
            let detected = pipeline::load_detected(&plan, &plan.out)?;
            pipeline::mass(&plan, &detected, &staging)?;
        }
        Command::Storage => {
            let detected = pipeline::load_detected(&plan, &plan.out)?;
            let inputs = pipeline::load_inputs(&plan)?;
            pipeline::storage(&plan, &inputs, &detected, &staging)?;
        }
        Command::All => {
            let inputs = pipeline::load_inputs(&plan)?;
            let detected = pipeline::detect(&plan, &inputs, &mut staging)?;
            pipeline::stats(&detected, &staging)?;
            if plan.island {
                pipeline::effects(&plan, &detected, &staging)?;
            }
            pipeline::mass(&plan, &detected, &staging)?;
            pipeline::storage(&plan, &inputs, &detected, &staging)?;
        }
    }
    staging.commit(&plan, cli.command.name())
}

/// Configuration problems and malformed input data.
fn is_validation(err: &anyhow::Error) -> bool {
    use drought_core::Error as E;
    err.chain().any(|cause| {
        cause.is::<Invalid>()
            || matches!(
                cause.downcast_ref::<E>(),
                Some(E::Schema(_) | E::Range { .. } | E::Gap { .. } | E::Duplicate { .. } | E::Csv { .. })
            )
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            if is_validation(&err) {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
