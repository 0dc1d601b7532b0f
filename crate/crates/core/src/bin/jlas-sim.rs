use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use jlas::analysis::{flops_cfjlas, flops_iterative};
use jlas::sim::{
    emit_report, run_init_error_sweep, run_sweep, EstimatorChoice, InitMode, InitSweepConfig, ReportFormat,
    ScenarioSpec, SweepConfig,
};

#[derive(Parser)]
#[command(name = "jlas-sim", about = "Monte-Carlo experiments for sequential-TOA localization and synchronization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Estimator {
    Cfjlas,
    Iterative,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum Init {
    GroundTruth,
    Perturbed,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the measurement noise level.
    Simulate {
        /// Scenario file, or `default` for the built-in formation.
        #[arg(long, default_value = "default")]
        scenario: String,
        #[arg(long, default_value_t = 0.1)]
        noise_start: f64,
        #[arg(long, default_value_t = 3.0)]
        noise_stop: f64,
        #[arg(long, default_value_t = 11)]
        noise_steps: usize,
        #[arg(long, default_value_t = 2000)]
        runs: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Estimator::Both)]
        estimator: Estimator,
        #[arg(long, value_enum, default_value_t = Init::GroundTruth)]
        init_mode: Init,
        #[arg(long, default_value_t = 200.0)]
        init_error_std: f64,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep the initial position error of the iterative baseline.
    SweepInitError {
        #[arg(long, default_value = "default")]
        scenario: String,
        #[arg(long, default_value_t = 10.0)]
        init_start: f64,
        #[arg(long, default_value_t = 200.0)]
        init_stop: f64,
        #[arg(long, default_value_t = 20)]
        init_steps: usize,
        #[arg(long, default_value_t = 2.0)]
        sigma: f64,
        #[arg(long, default_value_t = 2000)]
        runs: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the flop models for one closed-form solve and `iters` iterations.
    Flops {
        #[arg(long = "K", default_value_t = 2)]
        k: u64,
        #[arg(long = "M", default_value_t = 8)]
        m: u64,
        #[arg(long, default_value_t = 1)]
        iters: u64,
    },
}

fn load(scenario: &str) -> jlas::Result<ScenarioSpec> {
    if scenario == "default" {
        Ok(ScenarioSpec::default_formation())
    } else {
        ScenarioSpec::load(scenario)
    }
}

fn format(f: Format) -> ReportFormat {
    match f {
        Format::Csv => ReportFormat::Csv,
        Format::Json => ReportFormat::Json,
    }
}

fn run(cli: Cli) -> jlas::Result<()> {
    match cli.command {
        Command::Simulate {
            scenario,
            noise_start,
            noise_stop,
            noise_steps,
            runs,
            seed,
            estimator,
            init_mode,
            init_error_std,
            format: fmt,
            out,
        } => {
            let config = SweepConfig {
                scenario: load(&scenario)?,
                noise_start,
                noise_stop,
                noise_steps,
                runs_per_step: runs,
                master_seed: seed,
                estimators: match estimator {
                    Estimator::Cfjlas => EstimatorChoice::Cfjlas,
                    Estimator::Iterative => EstimatorChoice::Iterative,
                    Estimator::Both => EstimatorChoice::Both,
                },
                init_error_std,
                init_mode: match init_mode {
                    Init::GroundTruth => InitMode::GroundTruth,
                    Init::Perturbed => InitMode::Perturbed,
                },
                ..SweepConfig::default()
            };
            let report = run_sweep(&config)?;
            emit_report(&report, format(fmt), &out)
        }
        Command::SweepInitError {
            scenario,
            init_start,
            init_stop,
            init_steps,
            sigma,
            runs,
            seed,
            format: fmt,
            out,
        } => {
            let config = InitSweepConfig {
                scenario: load(&scenario)?,
                sigma,
                init_start,
                init_stop,
                init_steps,
                runs_per_step: runs,
                master_seed: seed,
                ..InitSweepConfig::default()
            };
            let report = run_init_error_sweep(&config)?;
            emit_report(&report, format(fmt), &out)
        }
        Command::Flops { k, m, iters } => {
            println!("D = {}", flops_cfjlas(k, m));
            println!("nL = {}", flops_iterative(k, m, iters));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
