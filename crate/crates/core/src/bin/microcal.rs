use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use microcal::cli::{execute, Command, RunManifest};

/// Calibrate a demographic micro-simulation against observed indicators.
#[derive(Parser)]
#[command(name = "microcal", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Fit the parameters to observed data with the genetic algorithm.
    Calibrate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        observed: PathBuf,
        #[arg(long)]
        repetitions: Option<u32>,
        #[arg(long)]
        plateau: Option<usize>,
        #[arg(long = "max-gens")]
        max_gens: Option<usize>,
    },
    /// Run repetitions at fixed parameters and write indicator series.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// name,value CSV of parameters.
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        repetitions: Option<u32>,
        /// Score the averaged series against this data.
        #[arg(long)]
        observed: Option<PathBuf>,
        /// Also write each repetition's final world as JSON lines.
        #[arg(long)]
        snapshot: bool,
    },
    /// Uniform sampling plus correlation and regression analysis.
    Sensitivity {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        observed: PathBuf,
        /// Number of samples [default: 200].
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        repetitions: Option<u32>,
    },
    /// Recompute the analysis from an existing samples.csv.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Input samples [default: <out>/samples.csv].
        input: Option<PathBuf>,
    },
    /// Recover a hidden parameter set from synthetic data; exits 1 on failure.
    Selfcheck {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        repetitions: Option<u32>,
        #[arg(long)]
        plateau: Option<usize>,
        #[arg(long = "max-gens")]
        max_gens: Option<usize>,
    },
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Master seed [default: config value, else 42].
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads [default: available cores].
    #[arg(long)]
    threads: Option<usize>,
}

impl Common {
    fn manifest(self, command: Command) -> RunManifest {
        let mut m = RunManifest::new(command, self.out);
        m.config_path = self.config;
        m.master_seed = self.seed;
        m.threads = self.threads;
        m
    }
}

fn manifest(cmd: Cmd) -> RunManifest {
    match cmd {
        Cmd::Calibrate { common, observed, repetitions, plateau, max_gens } => {
            let mut m = common.manifest(Command::Calibrate);
            m.observed_path = Some(observed);
            m.repetitions = repetitions;
            m.plateau = plateau;
            m.max_generations = max_gens;
            m
        }
        Cmd::Simulate { common, params, repetitions, observed, snapshot } => {
            let mut m = common.manifest(Command::Simulate);
            m.params_path = Some(params);
            m.repetitions = repetitions;
            m.observed_path = observed;
            m.snapshot = snapshot;
            m
        }
        Cmd::Sensitivity { common, observed, samples, repetitions } => {
            let mut m = common.manifest(Command::Sensitivity);
            m.observed_path = Some(observed);
            m.samples = samples;
            m.repetitions = repetitions;
            m
        }
        Cmd::Analyze { common, input } => {
            let mut m = common.manifest(Command::Analyze);
            m.samples_path = input;
            m
        }
        Cmd::Selfcheck { common, repetitions, plateau, max_gens } => {
            let mut m = common.manifest(Command::Selfcheck);
            m.repetitions = repetitions;
            m.plateau = plateau;
            m.max_generations = max_gens;
            m
        }
    }
}

fn main() -> ExitCode {
    let manifest = manifest(Cli::parse().command);
    match execute(&manifest, &mut std::io::stdout()) {
        Ok(outcome) if outcome.passed => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
