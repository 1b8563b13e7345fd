//! `posteriorflow` — particle-based posterior samplers with a benchmark
//! harness: run experiment configs, aggregate traces, validate numerics,
//! and synthesize datasets.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use posteriorflow::commands::{cmd_compare, cmd_run, cmd_synth, cmd_validate};

#[derive(Parser)]
#[command(name = "posteriorflow", version, about = "Particle-based posterior sampling benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (sampler, seed) cell of an experiment config and write
    /// one trace CSV per cell.
    Run {
        /// Path to a key=value experiment config.
        config: PathBuf,
    },
    /// Aggregate the trace CSVs in a run directory into summary.csv and
    /// per-metric plot files.
    Compare {
        /// Directory produced by `run`.
        dir: PathBuf,
    },
    /// Run a named validation suite (gradcheck, fpe, jko,
    /// momentum-equivalence, lemma2).
    Validate {
        /// Suite name.
        suite: String,
    },
    /// Generate a synthetic dataset split into train/test CSVs.
    Synth {
        /// Dataset kind (currently `logistic`).
        kind: String,
        /// Total number of rows before the 80/20 split.
        #[arg(long)]
        n: usize,
        /// Feature dimension.
        #[arg(long)]
        d: usize,
        /// RNG seed.
        #[arg(long)]
        seed: u64,
        /// Output path prefix; writes `<out>_train.csv` and `<out>_test.csv`.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run { config } => cmd_run(&config).map(|paths| {
            for path in paths {
                println!("wrote {}", path.display());
            }
        }),
        Command::Compare { dir } => cmd_compare(&dir).map(|_| ()),
        Command::Validate { suite } => cmd_validate(&suite),
        Command::Synth { kind, n, d, seed, out } => cmd_synth(&kind, n, d, seed, &out).map(|_| ()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
