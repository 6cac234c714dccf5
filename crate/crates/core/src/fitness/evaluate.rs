use rayon::prelude::*;

use super::{score, FitnessCache, FitnessValue, IndicatorSeries};
use crate::error::{Error, Result};
use crate::microsim::{MicroSimulator, SimConfig, Simulator};
use crate::param_space::Chromosome;

/// Anything that scores a chromosome (lower is better). Implementations must
/// be deterministic: the same chromosome always gets the same score.
pub trait Objective: Sync {
    fn evaluate(&self, c: &Chromosome) -> Result<FitnessValue>;
}

/// Wraps a plain scoring function.
pub struct FnObjective<F>(pub F);

impl<F> Objective for FnObjective<F>
where
    F: Fn(&Chromosome) -> f64 + Sync,
{
    fn evaluate(&self, c: &Chromosome) -> Result<FitnessValue> {
        Ok(FitnessValue::from_score((self.0)(c)))
    }
}

/// Scores a chromosome by running the simulation `repetitions` times,
/// averaging the indicator series entrywise, and scoring the average against
/// the observed data. Repetition `i` always uses the generator stream `i`, so
/// a chromosome's score is reproducible.
pub struct SimulationObjective<'a, S = MicroSimulator> {
    pub cfg: &'a SimConfig,
    pub observed: &'a IndicatorSeries,
    pub repetitions: u32,
    pub simulator: S,
}

impl<'a> SimulationObjective<'a, MicroSimulator> {
    pub fn new(cfg: &'a SimConfig, observed: &'a IndicatorSeries, repetitions: u32) -> Self {
        Self { cfg, observed, repetitions, simulator: MicroSimulator }
    }
}

impl<S: Simulator> SimulationObjective<'_, S> {
    /// Entrywise mean of the repetitions. Repetitions run in parallel and are
    /// combined in index order.
    pub fn averaged_series(&self, c: &Chromosome) -> Result<IndicatorSeries> {
        if self.repetitions == 0 {
            return Err(Error::InvalidArgument("repetitions must be at least 1".into()));
        }
        let runs = (0..u64::from(self.repetitions))
            .into_par_iter()
            .map(|rep| self.simulator.simulate(self.cfg, c, rep))
            .collect::<Result<Vec<_>>>()?;
        Ok(IndicatorSeries::mean(&runs))
    }
}

impl<S: Simulator> Objective for SimulationObjective<'_, S> {
    fn evaluate(&self, c: &Chromosome) -> Result<FitnessValue> {
        score(&self.averaged_series(c)?, self.observed)
    }
}

/// Cache-backed scoring of one chromosome: a hit returns the stored value
/// without simulating; a miss scores with `objective` and stores the result.
pub fn evaluate(c: &Chromosome, objective: &impl Objective, cache: &FitnessCache) -> Result<FitnessValue> {
    cache.get_or_try_insert_with(c, || objective.evaluate(c))
}
