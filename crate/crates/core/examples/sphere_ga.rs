//! Genetic algorithm on an analytic objective: squared distance to the range
//! midpoints. Shows the trajectory and plateau stop without any simulation.

use microcal::fitness::FnObjective;
use microcal::ga::{run_ga, sphere, GaConfig};
use microcal::ParameterSpace;

fn main() -> microcal::Result<()> {
    let space = ParameterSpace::default_space();
    let config = GaConfig { population_size: 30, max_generations: 100, plateau_generations: 25, ..GaConfig::default() };
    let result = run_ga(&space, &config, &FnObjective(sphere(&space)))?;

    for g in result.trajectory.iter().step_by(10) {
        println!("gen {:>3}  best {:>12.6}  mean {:>12.4}", g.generation, g.best_fitness, g.mean_fitness);
    }
    println!("stopped: {} after {} generations", result.stop_reason, result.generations_run);
    for (name, v) in space.names().zip(result.best_chromosome.values()) {
        println!("  {name:<26} {v:.4}");
    }
    Ok(())
}
