//! Relative squared-error fitness and the memoization cache.

use microcal::fitness::{evaluate, fitness, FitnessCache, FnObjective};
use microcal::ParameterSpace;

fn main() -> microcal::Result<()> {
    // (simulated, observed); the zero-observed pair is skipped.
    let f = fitness(&[(10.0, 12.0), (20.0, 25.0), (3.0, 0.0)])?;
    println!("f = {:.6} over {} pairs, {} skipped", f.f, f.pairs_used, f.pairs_skipped);

    let space = ParameterSpace::default_space();
    let cache = FitnessCache::new();
    let objective = FnObjective(|c: &microcal::Chromosome| c.values().iter().sum());
    let c = space.midpoints();
    for _ in 0..3 {
        evaluate(&c, &objective, &cache)?;
    }
    let stats = cache.stats();
    println!("cache: {} hits, {} misses, {} entries", stats.hits, stats.misses, stats.entries);
    Ok(())
}
