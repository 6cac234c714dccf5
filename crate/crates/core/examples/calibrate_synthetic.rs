//! Calibration against synthetic data: observed indicators come from a known
//! parameter set, and the GA tries to recover a set that reproduces them.

use microcal::cli::synthetic_observed;
use microcal::fitness::SimulationObjective;
use microcal::ga::{run_ga, GaConfig};
use microcal::microsim::SimConfig;
use microcal::ParameterSpace;
use rand::SeedableRng;

fn main() -> microcal::Result<()> {
    let space = ParameterSpace::default_space();
    let hidden = space.sample_uniform(&mut rand_chacha::ChaCha8Rng::seed_from_u64(99));
    let mut sim = SimConfig::tiny(1, 400);
    sim.steps = 6;
    let observed = synthetic_observed(&sim, &hidden, 5)?;

    let config = GaConfig {
        population_size: 20,
        max_generations: 40,
        plateau_generations: 15,
        repetitions: 2,
        ..GaConfig::default()
    };
    let objective = SimulationObjective::new(&sim, &observed, config.repetitions);
    let result = run_ga(&space, &config, &objective)?;

    println!(
        "initial median {:.3} -> best {:.3} ({}, {} generations)",
        result.trajectory[0].median_fitness, result.best_fitness.f, result.stop_reason, result.generations_run
    );
    println!("cache: {} hits / {} misses", result.cache.hits, result.cache.misses);
    for (p, (h, b)) in space.params().iter().zip(hidden.values().iter().zip(result.best_chromosome.values())) {
        println!("  {:<26} hidden {h:>8.4}  recovered {b:>8.4}", p.name);
    }
    Ok(())
}
