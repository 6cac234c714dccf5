//! Command implementations behind the `microcal` binary. Every command reads
//! an optional experiment config, writes plain CSV artifacts into an output
//! directory, and runs its parallel work inside a pool of `threads` workers.

mod io;
mod selfcheck;

pub use io::{
    load_params, load_trajectory, read_params, read_trajectory, save_params, save_trajectory, write_params,
    write_trajectory, ParamsFile, TrajectoryRow, PARAMS_HEADER, TRAJECTORY_HEADER,
};
pub use selfcheck::{run_selfcheck, synthetic_observed, SelfcheckOptions, SelfcheckReport};

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitness::{score, IndicatorSeries, SimulationObjective};
use crate::ga::{run_ga, CalibrationResult, GaConfig};
use crate::microsim::{repetition_rng, run_with_world, SimConfig};
use crate::param_space::{ParameterDef, ParameterSpace};
use crate::stats::{run_sampling, Analysis, SampleMatrix};

/// Seed used when neither `--seed` nor the config sets one.
pub const DEFAULT_SEED: u64 = 42;
/// Sample count for `sensitivity` without `--samples`.
pub const DEFAULT_SAMPLES: usize = 200;

/// One experiment: simulation settings, GA settings and parameter-range
/// overrides. Every field is optional in the JSON file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub sim: SimConfig,
    pub ga: GaConfig,
    /// Replacement bounds for named parameters of the default space.
    pub space: Vec<ParameterDef>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))?;
        cfg.sim.validate().map_err(|e| Error::parse(path, e.to_string()))?;
        cfg.ga.validate().map_err(|e| Error::parse(path, e.to_string()))?;
        cfg.parameter_space().map_err(|e| Error::parse(path, e.to_string()))?;
        Ok(cfg)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn parameter_space(&self) -> Result<ParameterSpace> {
        ParameterSpace::default_space().with_overrides(&self.space)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Calibrate,
    Simulate,
    Sensitivity,
    Analyze,
    Selfcheck,
}

/// Everything a command needs from the command line. `None` means "use the
/// config value, or the documented default".
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub command: Command,
    pub config_path: Option<PathBuf>,
    pub observed_path: Option<PathBuf>,
    pub output_dir: PathBuf,
    /// Overrides `ga.master_seed`; also seeds sampling and the self-check.
    pub master_seed: Option<u64>,
    /// Worker threads; defaults to the available cores.
    pub threads: Option<usize>,
    pub repetitions: Option<u32>,
    pub samples: Option<usize>,
    pub params_path: Option<PathBuf>,
    /// Input `samples.csv` for `analyze`; defaults to `<output_dir>/samples.csv`.
    pub samples_path: Option<PathBuf>,
    pub plateau: Option<usize>,
    pub max_generations: Option<usize>,
    /// `simulate` also writes the final world of each repetition as JSON lines.
    pub snapshot: bool,
}

impl RunManifest {
    pub fn new(command: Command, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            command,
            config_path: None,
            observed_path: None,
            output_dir: output_dir.into(),
            master_seed: None,
            threads: None,
            repetitions: None,
            samples: None,
            params_path: None,
            samples_path: None,
            plateau: None,
            max_generations: None,
            snapshot: false,
        }
    }

    fn config(&self) -> Result<ExperimentConfig> {
        match &self.config_path {
            Some(p) => ExperimentConfig::load(p),
            None => Ok(ExperimentConfig::default()),
        }
    }

    fn observed(&self) -> Result<IndicatorSeries> {
        let path = self
            .observed_path
            .as_deref()
            .ok_or_else(|| Error::InvalidArgument(format!("{:?} needs --observed", self.command)))?;
        IndicatorSeries::load(path)
    }

    fn repetitions(&self, cfg: &ExperimentConfig) -> Result<u32> {
        let r = self.repetitions.unwrap_or(cfg.ga.repetitions);
        if r == 0 {
            return Err(Error::InvalidArgument("--repetitions must be at least 1".into()));
        }
        Ok(r)
    }

    fn out(&self, name: &str) -> PathBuf {
        self.output_dir.join(name)
    }
}

/// What a command produced: a human-readable summary and whether it met its
/// own success condition (only the self-check can fail this way).
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub passed: bool,
    pub summary: String,
}

/// Runs `manifest.command` in a dedicated thread pool and writes its
/// progress lines to `log`.
pub fn execute(manifest: &RunManifest, log: &mut (dyn Write + Send)) -> Result<Outcome> {
    let threads = match manifest.threads {
        Some(0) => return Err(Error::InvalidArgument("--threads must be at least 1".into())),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start {threads} worker threads: {e}")))?;
    std::fs::create_dir_all(&manifest.output_dir).map_err(|e| Error::io(&manifest.output_dir, e))?;
    pool.install(|| match manifest.command {
        Command::Calibrate => cmd_calibrate(manifest, log),
        Command::Simulate => cmd_simulate(manifest, log),
        Command::Sensitivity => cmd_sensitivity(manifest, log),
        Command::Analyze => cmd_analyze(manifest, log),
        Command::Selfcheck => cmd_selfcheck(manifest, log),
    })
}

fn note(log: &mut (dyn Write + Send), line: &str) {
    let _ = writeln!(log, "{line}");
}

/// Writes `trajectory.csv`, `best_params.csv` and `summary.txt`.
pub fn cmd_calibrate(m: &RunManifest, log: &mut (dyn Write + Send)) -> Result<Outcome> {
    let observed = m.observed()?;
    let mut cfg = m.config()?;
    if let Some(seed) = m.master_seed {
        cfg.ga.master_seed = seed;
    }
    cfg.ga.repetitions = m.repetitions(&cfg)?;
    if let Some(p) = m.plateau {
        cfg.ga.plateau_generations = p;
    }
    if let Some(g) = m.max_generations {
        cfg.ga.max_generations = g;
    }
    let space = cfg.parameter_space()?;
    cfg.sim.validate()?;

    let started = Instant::now();
    let objective = SimulationObjective::new(&cfg.sim, &observed, cfg.ga.repetitions);
    let result = run_ga(&space, &cfg.ga, &objective)?;
    let wall = started.elapsed();

    save_trajectory(&result.trajectory, &m.out("trajectory.csv"))?;
    save_params(&space, &result.best_chromosome, &m.out("best_params.csv"))?;
    let summary = calibration_summary(&space, &result, wall.as_secs_f64());
    std::fs::write(m.out("summary.txt"), &summary).map_err(|e| Error::io(m.out("summary.txt"), e))?;
    note(log, &summary);
    Ok(Outcome { passed: true, summary })
}

fn calibration_summary(space: &ParameterSpace, r: &CalibrationResult, wall_seconds: f64) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "stop_reason: {}", r.stop_reason);
    let _ = writeln!(s, "generations: {}", r.generations_run);
    let _ = writeln!(s, "best_fitness: {}", r.best_fitness.f);
    let _ = writeln!(s, "pairs_used: {}", r.best_fitness.pairs_used);
    let _ = writeln!(s, "pairs_skipped: {}", r.best_fitness.pairs_skipped);
    let _ = writeln!(s, "cache_hits: {}", r.cache.hits);
    let _ = writeln!(s, "cache_misses: {}", r.cache.misses);
    let _ = writeln!(s, "cache_entries: {}", r.cache.entries);
    let _ = writeln!(s, "wall_seconds: {wall_seconds:.3}");
    let _ = writeln!(s, "best_params:");
    for (name, v) in space.names().zip(r.best_chromosome.values()) {
        let _ = writeln!(s, "  {name}: {v}");
    }
    s
}

/// Writes `rep_NNN.csv` per repetition and `mean.csv`, the entrywise mean.
/// With `--observed`, also scores the mean against it.
pub fn cmd_simulate(m: &RunManifest, log: &mut (dyn Write + Send)) -> Result<Outcome> {
    let cfg = m.config()?;
    let space = cfg.parameter_space()?;
    let reps = m.repetitions(&cfg)?;
    let params = match &m.params_path {
        Some(p) => load_params(&space, p)?,
        None => return Err(Error::InvalidArgument("simulate needs --params".into())),
    };
    if !params.defaulted.is_empty() {
        note(log, &format!("warning: parameters not in the file use range midpoints: {}", params.defaulted.join(", ")));
    }
    cfg.sim.validate()?;

    let runs = (0..u64::from(reps))
        .into_par_iter()
        .map(|rep| run_with_world(&cfg.sim, &params.chromosome, &mut repetition_rng(cfg.sim.repetition_seed_base, rep)))
        .collect::<Result<Vec<_>>>()?;
    for (rep, (series, world)) in runs.iter().enumerate() {
        series.save(&m.out(&format!("rep_{rep:03}.csv")))?;
        if m.snapshot {
            let path = m.out(&format!("world_{rep:03}.jsonl"));
            let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            world.write_snapshot(std::io::BufWriter::new(file)).map_err(|e| Error::io(&path, e))?;
        }
    }
    let series: Vec<IndicatorSeries> = runs.into_iter().map(|(s, _)| s).collect();
    let mean = IndicatorSeries::mean(&series);
    mean.save(&m.out("mean.csv"))?;

    let mut summary = format!("repetitions: {reps}\nentries: {}\n", mean.len());
    if m.observed_path.is_some() {
        let f = score(&mean, &m.observed()?)?;
        let _ = writeln!(summary, "fitness: {}\npairs_used: {}\npairs_skipped: {}", f.f, f.pairs_used, f.pairs_skipped);
    }
    note(log, &summary);
    Ok(Outcome { passed: true, summary })
}

/// Samples the space, scores every draw, and writes `samples.csv`,
/// `analysis.csv` and `analysis.txt`.
pub fn cmd_sensitivity(m: &RunManifest, log: &mut (dyn Write + Send)) -> Result<Outcome> {
    let n = m.samples.unwrap_or(DEFAULT_SAMPLES);
    if n < 2 {
        return Err(Error::InvalidArgument(format!("--samples must be at least 2, got {n}")));
    }
    let observed = m.observed()?;
    let cfg = m.config()?;
    let space = cfg.parameter_space()?;
    let reps = m.repetitions(&cfg)?;
    cfg.sim.validate()?;
    let seed = m.master_seed.unwrap_or(cfg.ga.master_seed);

    let objective = SimulationObjective::new(&cfg.sim, &observed, reps);
    let samples = run_sampling(&space, &objective, n, seed)?;
    samples.save(&m.out("samples.csv"))?;
    write_analysis(m, &samples, log)
}

/// Recomputes `analysis.csv` and `analysis.txt` from an existing
/// `samples.csv`.
pub fn cmd_analyze(m: &RunManifest, log: &mut (dyn Write + Send)) -> Result<Outcome> {
    let space = m.config()?.parameter_space()?;
    let input = m.samples_path.clone().unwrap_or_else(|| m.out("samples.csv"));
    let samples = SampleMatrix::load(space, &input)?;
    write_analysis(m, &samples, log)
}

fn write_analysis(m: &RunManifest, samples: &SampleMatrix, log: &mut (dyn Write + Send)) -> Result<Outcome> {
    let analysis = Analysis::compute(samples)?;
    analysis.save_csv(&m.out("analysis.csv"))?;
    analysis.save_text(&m.out("analysis.txt"))?;
    let summary = analysis.to_text();
    note(log, &summary);
    Ok(Outcome { passed: true, summary })
}

/// Hidden-parameter recovery check; writes `selfcheck.txt` and the GA
/// trajectory. Fails (without erroring) when recovery misses the threshold.
pub fn cmd_selfcheck(m: &RunManifest, log: &mut (dyn Write + Send)) -> Result<Outcome> {
    let mut opts = SelfcheckOptions::default();
    if let Some(p) = &m.config_path {
        opts.sim = ExperimentConfig::load(p)?.sim;
    }
    if let Some(seed) = m.master_seed {
        opts.seed = seed;
    }
    if let Some(p) = m.plateau {
        opts.ga.plateau_generations = p;
    }
    if let Some(g) = m.max_generations {
        opts.ga.max_generations = g;
    }
    if let Some(r) = m.repetitions {
        if r == 0 {
            return Err(Error::InvalidArgument("--repetitions must be at least 1".into()));
        }
        opts.ga.repetitions = r;
    }
    let report = run_selfcheck(&opts)?;
    save_trajectory(&report.calibration.trajectory, &m.out("selfcheck_trajectory.csv"))?;
    let summary = report.to_text();
    std::fs::write(m.out("selfcheck.txt"), &summary).map_err(|e| Error::io(m.out("selfcheck.txt"), e))?;
    note(log, &summary);
    Ok(Outcome { passed: report.passed, summary })
}
