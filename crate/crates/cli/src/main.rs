use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mtggm_cli::config::{
    CommonArgs, DataArgs, EvalArgs, EvalConfig, FitConfig, GridArgs, SweepConfig, SynthArgs, SynthConfig,
};
use mtggm_cli::{run_eval, run_fit, run_sweep, run_synth_experiment, HarnessError};

#[derive(Parser)]
#[command(name = "mtggm", version, about = "Multi-task sparse Gaussian graphical models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit precision matrices to one data file per task.
    Fit {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        data: DataArgs,
    },
    /// Run the synthetic recovery protocol over a ρ grid.
    Synth {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        synth: SynthArgs,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Score saved estimates against ground-truth precision matrices.
    Eval {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        eval: EvalArgs,
    },
    /// Fit over a ρ grid on real data.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        grid: GridArgs,
        /// Ground-truth precision matrices for scoring, one per task.
        #[arg(long = "truth", num_args = 1..)]
        truth: Vec<PathBuf>,
    },
}

fn execute(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Fit { common, data } => {
            let outcome = run_fit(&FitConfig::resolve(&common, &data)?)?;
            for path in &outcome.artifacts {
                println!("{}", path.display());
            }
        }
        Command::Synth { common, synth, grid } => {
            let cfg = SynthConfig::resolve(&common, &synth, &grid)?;
            let manifest = run_synth_experiment(&cfg)?;
            for note in &manifest.failures {
                eprintln!("warning: {}", serde_json::to_string(note).expect("serializable"));
            }
            for name in &manifest.artifacts {
                println!("{}", cfg.out.join(name).display());
            }
        }
        Command::Eval { common, eval } => {
            let report = run_eval(&EvalConfig::resolve(&common, &eval)?)?;
            println!("{}", serde_json::to_string_pretty(&report).expect("serializable"));
        }
        Command::Sweep {
            common,
            data,
            grid,
            truth,
        } => {
            let cfg = SweepConfig::resolve(&common, &data, &grid, &truth)?;
            let manifest = run_sweep(&cfg)?;
            for note in &manifest.failures {
                eprintln!("warning: {}", serde_json::to_string(note).expect("serializable"));
            }
            for name in &manifest.artifacts {
                println!("{}", cfg.fit.out.join(name).display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", serde_json::to_string(&e.record()).expect("serializable"));
            ExitCode::FAILURE
        }
    }
}
