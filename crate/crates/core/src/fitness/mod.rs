//! Scoring simulated indicators against observed data.
//!
//! The score of a chromosome is the sum of squared relative errors
//! `((sim - obs) / obs)^2` over every observed cell that the simulation
//! covers. Relative errors keep counts of different magnitudes (a
//! municipality's births next to its age structure) on the same footing.
//! Cells whose observed value is zero have no relative error and are skipped.

mod cache;
mod evaluate;
pub mod series;

pub use cache::{CacheStats, FitnessCache};
pub use evaluate::{evaluate, FnObjective, Objective, SimulationObjective};
pub use series::{GeoLevel, Indicator, IndicatorKey, IndicatorSeries};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitnessValue {
    pub f: f64,
    pub pairs_used: usize,
    pub pairs_skipped: usize,
}

impl FitnessValue {
    /// A bare score with no pair accounting, for analytic objectives.
    pub fn from_score(f: f64) -> Self {
        Self { f, pairs_used: 0, pairs_skipped: 0 }
    }
}

/// One simulated/observed value pair for the same key.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pair {
    pub simulated: f64,
    pub observed: f64,
}

impl From<(f64, f64)> for Pair {
    fn from((simulated, observed): (f64, f64)) -> Self {
        Self { simulated, observed }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    pub pairs: Vec<Pair>,
    /// Observed keys the simulation does not cover.
    pub gaps: Vec<IndicatorKey>,
}

/// Pairs every observed entry with the simulated value for the same
/// indicator, sub-key, geography and year. District-level indicators are
/// percentages on both sides, so they compare directly.
pub fn align(sim: &IndicatorSeries, observed: &IndicatorSeries) -> Result<Alignment> {
    let mut pairs = Vec::with_capacity(observed.len());
    let mut gaps = Vec::new();
    for (key, &obs) in observed.iter() {
        match sim.get(key) {
            Some(simulated) => pairs.push(Pair { simulated, observed: obs }),
            None => gaps.push(*key),
        }
    }
    if pairs.is_empty() {
        return Err(Error::EmptyAlignment { gaps: gaps.len() });
    }
    Ok(Alignment { pairs, gaps })
}

/// Sum of squared relative errors over pairs with a non-zero observed value.
pub fn fitness<P: Into<Pair> + Copy>(pairs: &[P]) -> Result<FitnessValue> {
    let mut f = 0.0;
    let mut used = 0;
    for p in pairs.iter().map(|&p| p.into()) {
        if p.observed != 0.0 {
            let rel = (p.simulated - p.observed) / p.observed;
            f += rel * rel;
            used += 1;
        }
    }
    if used == 0 {
        return Err(Error::AllObservedZero(pairs.len()));
    }
    Ok(FitnessValue { f, pairs_used: used, pairs_skipped: pairs.len() - used })
}

/// [`align`] followed by [`fitness`].
pub fn score(sim: &IndicatorSeries, observed: &IndicatorSeries) -> Result<FitnessValue> {
    fitness(&align(sim, observed)?.pairs)
}
