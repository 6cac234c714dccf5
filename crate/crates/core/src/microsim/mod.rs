//! A small yearly-step micro-simulation of individuals, households and jobs
//! spread over a set of municipalities. Each calibration parameter gates the
//! behavior its name describes; everything else is fixed in [`Dynamics`].

mod config;
mod dynamics;
mod indicators;
mod world;

pub use config::{AgeBand, Dynamics, HazardBand, SimConfig, SynthesisSpec};
pub use dynamics::{step_year, ModelParams, StepStats};
pub use indicators::{extract_indicators, HOUSEHOLD_SIZE_CLASSES};
pub use world::{
    Activity, EventCounters, Household, HouseholdId, Individual, Municipality, MunicipalityId, PersonId, Sex,
    WorldState,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::fitness::series::IndicatorSeries;
use crate::param_space::Chromosome;

/// Generator owned by repetition `rep`: stream `rep` of a ChaCha generator
/// seeded with `seed_base`. Streams never overlap, so repetitions can run on
/// any thread in any order.
pub fn repetition_rng(seed_base: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed_base);
    rng.set_stream(rep);
    rng
}

pub fn init_world(cfg: &SimConfig, rng: &mut impl rand::Rng) -> Result<WorldState> {
    WorldState::init(cfg, rng)
}

/// Builds a world and runs it for `cfg.steps` years, collecting indicators
/// after every step.
pub fn run(cfg: &SimConfig, params: &Chromosome, rng: &mut impl rand::Rng) -> Result<IndicatorSeries> {
    Ok(run_with_world(cfg, params, rng)?.0)
}

/// Like [`run`] but also returns the final world.
pub fn run_with_world(
    cfg: &SimConfig,
    params: &Chromosome,
    rng: &mut impl rand::Rng,
) -> Result<(IndicatorSeries, WorldState)> {
    let model = ModelParams::from_chromosome(params);
    let mut world = init_world(cfg, rng)?;
    let mut series = IndicatorSeries::new();
    for _ in 0..cfg.steps {
        step_year(&mut world, cfg, &model, rng);
        series.extend(extract_indicators(&world, cfg));
    }
    Ok((series, world))
}

/// Source of simulated indicator series; lets tests count or replace runs.
pub trait Simulator: Sync {
    fn simulate(&self, cfg: &SimConfig, params: &Chromosome, repetition: u64) -> Result<IndicatorSeries>;
}

/// The micro-simulation in this module.
#[derive(Debug, Clone, Copy, Default)]
pub struct MicroSimulator;

impl Simulator for MicroSimulator {
    fn simulate(&self, cfg: &SimConfig, params: &Chromosome, repetition: u64) -> Result<IndicatorSeries> {
        run(cfg, params, &mut repetition_rng(cfg.repetition_seed_base, repetition))
    }
}
