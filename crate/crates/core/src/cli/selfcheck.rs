use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fitness::{IndicatorSeries, SimulationObjective};
use crate::ga::{run_ga, CalibrationResult, GaConfig};
use crate::microsim::SimConfig;
use crate::param_space::{Chromosome, ParameterSpace};

/// Offset between the GA's repetition seeds and those used to synthesize the
/// observed data, so the target is never one of the GA's own runs.
const OBSERVED_SEED_OFFSET: u64 = 0x0b5e_7ed0_0000;

#[derive(Debug, Clone, PartialEq)]
pub struct SelfcheckOptions {
    pub sim: SimConfig,
    pub ga: GaConfig,
    /// Draws the hidden chromosome and seeds the GA.
    pub seed: u64,
    /// Runs averaged into the synthetic observed series.
    pub observed_repetitions: u32,
    /// Pass iff best fitness <= this fraction of generation 0's median.
    pub threshold: f64,
}

impl Default for SelfcheckOptions {
    fn default() -> Self {
        Self {
            sim: SimConfig::tiny(2, 500),
            ga: GaConfig {
                population_size: 30,
                max_generations: 150,
                plateau_generations: 60,
                repetitions: 3,
                ..GaConfig::default()
            },
            seed: super::DEFAULT_SEED,
            observed_repetitions: 5,
            threshold: 0.10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SelfcheckReport {
    pub space: ParameterSpace,
    pub hidden: Chromosome,
    pub calibration: CalibrationResult,
    pub initial_median: f64,
    pub passed: bool,
    pub threshold: f64,
}

impl SelfcheckReport {
    pub fn ratio(&self) -> f64 {
        self.calibration.best_fitness.f / self.initial_median
    }

    /// `|recovered - hidden| / range width` per parameter.
    pub fn parameter_errors(&self) -> Vec<(String, f64)> {
        self.space
            .params()
            .iter()
            .zip(self.hidden.values().iter().zip(self.calibration.best_chromosome.values()))
            .map(|(p, (h, b))| (p.name.clone(), (b - h).abs() / p.width()))
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let c = &self.calibration;
        let _ = writeln!(s, "result: {}", if self.passed { "PASS" } else { "FAIL" });
        let _ = writeln!(s, "stop_reason: {}", c.stop_reason);
        let _ = writeln!(s, "generations: {}", c.generations_run);
        let _ = writeln!(s, "initial_median_fitness: {}", self.initial_median);
        let _ = writeln!(s, "best_fitness: {}", c.best_fitness.f);
        let _ = writeln!(s, "ratio: {:.6} (threshold {})", self.ratio(), self.threshold);
        let _ = writeln!(s, "cache_hits: {}", c.cache.hits);
        let _ = writeln!(s, "cache_misses: {}", c.cache.misses);
        let _ = writeln!(s, "{:<28}{:>12}{:>12}{:>12}", "parameter", "hidden", "recovered", "rel_error");
        for ((name, err), (h, b)) in
            self.parameter_errors().into_iter().zip(self.hidden.values().iter().zip(c.best_chromosome.values()))
        {
            let _ = writeln!(s, "{name:<28}{h:>12.4}{b:>12.4}{err:>12.4}");
        }
        s
    }
}

/// Synthetic observed data: the mean of `repetitions` runs at `params` under
/// seeds disjoint from the calibration runs.
pub fn synthetic_observed(sim: &SimConfig, params: &Chromosome, repetitions: u32) -> Result<IndicatorSeries> {
    let mut shifted = sim.clone();
    shifted.repetition_seed_base = sim.repetition_seed_base.wrapping_add(OBSERVED_SEED_OFFSET);
    SimulationObjective::new(&shifted, &IndicatorSeries::new(), repetitions).averaged_series(params)
}

/// Draws a hidden chromosome, synthesizes observed data from it, and runs
/// the GA against that data.
pub fn run_selfcheck(opts: &SelfcheckOptions) -> Result<SelfcheckReport> {
    if opts.threshold.is_nan() || opts.threshold <= 0.0 {
        return Err(Error::InvalidArgument("self-check threshold must be positive".into()));
    }
    opts.sim.validate()?;
    let space = ParameterSpace::default_space();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    // The GA draws from stream 0 of the same seed; keep the hidden draw apart.
    rng.set_stream(1);
    let hidden = space.sample_uniform(&mut rng);
    let observed = synthetic_observed(&opts.sim, &hidden, opts.observed_repetitions)?;

    let ga = GaConfig { master_seed: opts.seed, ..opts.ga.clone() };
    let objective = SimulationObjective::new(&opts.sim, &observed, ga.repetitions);
    let calibration = run_ga(&space, &ga, &objective)?;
    let initial_median = calibration.trajectory[0].median_fitness;
    let passed = calibration.best_fitness.f <= opts.threshold * initial_median;
    Ok(SelfcheckReport { space, hidden, calibration, initial_median, passed, threshold: opts.threshold })
}
