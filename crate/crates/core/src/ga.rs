//! Generational genetic algorithm with truncation selection.
//!
//! Each generation is scored through a [`FitnessCache`], the best
//! `ceil(truncation_fraction * population_size)` chromosomes survive
//! unchanged, and the remaining slots are refilled with mutated uniform
//! crossovers of two survivors. Survivors hit the cache, so the best score
//! never gets worse from one generation to the next.
//!
//! All random draws come from one master stream in a fixed order, and
//! parallel scoring only ever touches deterministic objectives, so a run is
//! reproducible for a given seed regardless of the thread count.

use std::collections::HashMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitness::{CacheStats, FitnessCache, FitnessValue, Objective};
use crate::param_space::{Chromosome, ParameterSpace};

/// A best-so-far change no larger than this does not reset the plateau counter.
pub const IMPROVEMENT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub population_size: usize,
    pub max_generations: usize,
    /// Stop after this many consecutive generations without improvement.
    pub plateau_generations: usize,
    pub truncation_fraction: f64,
    /// Per-gene mutation probability.
    pub mutation_rate: f64,
    /// Mutation standard deviation as a fraction of each parameter's range.
    pub mutation_scale: f64,
    /// Simulation runs averaged per fitness evaluation.
    pub repetitions: u32,
    pub master_seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 50,
            max_generations: 500,
            plateau_generations: 200,
            truncation_fraction: 0.5,
            mutation_rate: 0.1,
            mutation_scale: 0.1,
            repetitions: 5,
            master_seed: 42,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidGaConfig(m.to_string()));
        if self.population_size < 2 {
            return bad("population_size must be at least 2");
        }
        if !(self.truncation_fraction > 0.0 && self.truncation_fraction < 1.0) {
            return bad("truncation_fraction must lie strictly between 0 and 1");
        }
        if self.max_generations < 1 || self.plateau_generations < 1 {
            return bad("max_generations and plateau_generations must be at least 1");
        }
        if self.plateau_generations > self.max_generations {
            return bad("plateau_generations must not exceed max_generations");
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) || self.mutation_scale.is_nan() || self.mutation_scale < 0.0 {
            return bad("mutation_rate must lie in [0, 1] and mutation_scale must be non-negative");
        }
        if self.repetitions < 1 {
            return bad("repetitions must be at least 1");
        }
        Ok(())
    }

    pub fn survivors(&self) -> usize {
        survivor_count(self.population_size, self.truncation_fraction)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRecord {
    pub generation: usize,
    /// Best fitness seen so far, this generation included.
    pub best_fitness: f64,
    /// Best fitness within this generation.
    pub generation_best: f64,
    pub mean_fitness: f64,
    pub median_fitness: f64,
    /// Chromosomes scored without simulating (cache or in-generation duplicate).
    pub cache_hits: usize,
    /// Chromosomes actually handed to the objective.
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxGenerations,
    Plateau,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::MaxGenerations => "max_generations",
            StopReason::Plateau => "plateau",
        })
    }
}

#[derive(Debug, Clone)]
pub struct CalibrationResult {
    pub best_chromosome: Chromosome,
    pub best_fitness: FitnessValue,
    pub trajectory: Vec<GenerationRecord>,
    pub generations_run: usize,
    pub stop_reason: StopReason,
    pub cache: CacheStats,
}

/// Output of one generation.
#[derive(Debug, Clone)]
pub struct Generation {
    /// The scored population, in input order.
    pub scored: Vec<(Chromosome, FitnessValue)>,
    pub next: Vec<Chromosome>,
    pub record: GenerationRecord,
}

pub fn init_population<R: Rng + ?Sized>(space: &ParameterSpace, n: usize, rng: &mut R) -> Vec<Chromosome> {
    (0..n).map(|_| space.sample_uniform(rng)).collect()
}

fn survivor_count(size: usize, fraction: f64) -> usize {
    ((fraction * size as f64).ceil() as usize).clamp(1, size)
}

/// The `ceil(fraction * len)` lowest-fitness chromosomes, ties kept in input order.
pub fn select_truncation(scored: &[(Chromosome, f64)], fraction: f64) -> Vec<Chromosome> {
    if scored.is_empty() {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.sort_by(|&a, &b| scored[a].1.total_cmp(&scored[b].1));
    order.truncate(survivor_count(scored.len(), fraction));
    order.into_iter().map(|i| scored[i].0.clone()).collect()
}

/// Uniform crossover: each gene comes from `a` or `b` with equal probability.
pub fn crossover<R: Rng + ?Sized>(a: &Chromosome, b: &Chromosome, rng: &mut R) -> Chromosome {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(&x, &y)| if rng.random_bool(0.5) { x } else { y })
        .collect::<Vec<_>>()
        .into()
}

/// Perturbs each gene with probability `rate` by a zero-mean Gaussian with
/// standard deviation `scale * (upper - lower)`, then repairs the chromosome.
pub fn mutate<R: Rng + ?Sized>(
    space: &ParameterSpace,
    c: &Chromosome,
    rate: f64,
    scale: f64,
    rng: &mut R,
) -> Chromosome {
    let mut out = c.clone();
    for (v, p) in out.values_mut().iter_mut().zip(space.params()) {
        if rng.random::<f64>() < rate {
            let sd = scale * p.width();
            if let Ok(noise) = Normal::new(0.0, sd) {
                *v += noise.sample(rng);
            }
        }
    }
    space.clamp_and_round(&out)
}

/// Scores a population through the cache. Each distinct chromosome is looked
/// up once; misses are scored in parallel and stored; in-generation
/// duplicates are then served from the cache. Returns the scores in input
/// order with the number of cache hits and objective calls.
pub fn score_population(
    space: &ParameterSpace,
    population: &[Chromosome],
    objective: &impl Objective,
    cache: &FitnessCache,
) -> Result<(Vec<FitnessValue>, usize, usize)> {
    for c in population {
        space.ensure_valid(c)?;
    }
    let mut first_seen = HashMap::with_capacity(population.len());
    let mut distinct = Vec::new();
    let mut duplicates = Vec::new();
    for (i, c) in population.iter().enumerate() {
        if first_seen.insert(c.key(), i).is_none() {
            distinct.push(i);
        } else {
            duplicates.push(i);
        }
    }

    let mut scores: Vec<Option<FitnessValue>> = vec![None; population.len()];
    let mut misses = Vec::new();
    for &i in &distinct {
        match cache.lookup(&population[i]) {
            Some(v) => scores[i] = Some(v),
            None => misses.push(i),
        }
    }
    let fresh = misses.par_iter().map(|&i| objective.evaluate(&population[i])).collect::<Result<Vec<_>>>()?;
    for (&i, v) in misses.iter().zip(fresh) {
        cache.insert(&population[i], v);
        scores[i] = Some(v);
    }
    for &i in &duplicates {
        scores[i] = cache.lookup(&population[i]);
    }
    let evaluations = misses.len();
    let scores: Vec<FitnessValue> = scores.into_iter().map(|s| s.expect("every slot scored")).collect();
    Ok((scores, population.len() - evaluations, evaluations))
}

/// Scores `population`, keeps the truncation survivors, and refills the rest
/// with `mutate(crossover(a, b))` for survivors `a`, `b` drawn uniformly.
pub fn step_generation<R: Rng + ?Sized>(
    space: &ParameterSpace,
    population: &[Chromosome],
    objective: &impl Objective,
    cache: &FitnessCache,
    config: &GaConfig,
    generation: usize,
    rng: &mut R,
) -> Result<Generation> {
    if population.len() != config.population_size {
        return Err(Error::InvalidArgument(format!(
            "population has {} chromosomes, config expects {}",
            population.len(),
            config.population_size
        )));
    }
    let (scores, cache_hits, evaluations) = score_population(space, population, objective, cache)?;
    let ranked: Vec<(Chromosome, f64)> = population.iter().cloned().zip(scores.iter().map(|v| v.f)).collect();
    let survivors = select_truncation(&ranked, config.truncation_fraction);

    let mut next = survivors.clone();
    while next.len() < config.population_size {
        let a = &survivors[rng.random_range(0..survivors.len())];
        let b = &survivors[rng.random_range(0..survivors.len())];
        let child = crossover(a, b, rng);
        next.push(mutate(space, &child, config.mutation_rate, config.mutation_scale, rng));
    }

    let fs: Vec<f64> = scores.iter().map(|v| v.f).collect();
    let best = fs.iter().copied().fold(f64::INFINITY, f64::min);
    let record = GenerationRecord {
        generation,
        best_fitness: best,
        generation_best: best,
        mean_fitness: fs.iter().sum::<f64>() / fs.len() as f64,
        median_fitness: median(&fs),
        cache_hits,
        evaluations,
    };
    Ok(Generation { scored: population.iter().cloned().zip(scores).collect(), next, record })
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Runs the GA with a fresh cache.
pub fn run_ga(space: &ParameterSpace, config: &GaConfig, objective: &impl Objective) -> Result<CalibrationResult> {
    run_ga_with_cache(space, config, objective, &FitnessCache::new())
}

/// Runs until `max_generations` generations have been scored or the best
/// fitness has not improved for `plateau_generations` consecutive generations.
pub fn run_ga_with_cache(
    space: &ParameterSpace,
    config: &GaConfig,
    objective: &impl Objective,
    cache: &FitnessCache,
) -> Result<CalibrationResult> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.master_seed);
    let mut population = init_population(space, config.population_size, &mut rng);
    let mut best: Option<(Chromosome, FitnessValue)> = None;
    let mut stale = 0;
    let mut trajectory = Vec::new();

    let stop_reason = loop {
        let generation = trajectory.len();
        let mut step = step_generation(space, &population, objective, cache, config, generation, &mut rng)?;
        let (champion, value) =
            step.scored.iter().min_by(|a, b| a.1.f.total_cmp(&b.1.f)).expect("population is never empty");
        match &best {
            None => best = Some((champion.clone(), *value)),
            Some((_, current)) => {
                if current.f - value.f > IMPROVEMENT_TOLERANCE {
                    stale = 0;
                } else {
                    stale += 1;
                }
                if value.f < current.f {
                    best = Some((champion.clone(), *value));
                }
            }
        }
        step.record.best_fitness = best.as_ref().unwrap().1.f;
        trajectory.push(step.record);

        if stale >= config.plateau_generations {
            break StopReason::Plateau;
        }
        if trajectory.len() >= config.max_generations {
            break StopReason::MaxGenerations;
        }
        population = step.next;
    };

    let (best_chromosome, best_fitness) = best.expect("at least one generation ran");
    Ok(CalibrationResult {
        best_chromosome,
        best_fitness,
        generations_run: trajectory.len(),
        trajectory,
        stop_reason,
        cache: cache.stats(),
    })
}

/// Sphere test objective `sum((v - center)^2)`, centered on the range
/// midpoints (lattice-snapped for integer parameters so the optimum of 0 is
/// reachable).
pub fn sphere(space: &ParameterSpace) -> impl Fn(&Chromosome) -> f64 + Sync + '_ {
    let center = space.midpoints();
    move |c: &Chromosome| c.values().iter().zip(center.values()).map(|(v, m)| (v - m) * (v - m)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fitness::FnObjective;
    use crate::param_space::{ParamKind, ParameterDef};
    use proptest::prelude::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn labeled(fs: &[f64]) -> Vec<(Chromosome, f64)> {
        fs.iter().enumerate().map(|(i, &f)| (Chromosome::new(vec![i as f64]), f)).collect()
    }

    fn ids(cs: &[Chromosome]) -> Vec<usize> {
        cs.iter().map(|c| c[0] as usize).collect()
    }

    #[test]
    fn population_init() {
        let space = ParameterSpace::default_space();
        let pop = init_population(&space, 50, &mut rng(1));
        assert_eq!(pop.len(), 50);
        assert!(pop.iter().all(|c| space.validate(c).is_ok()));
        assert_eq!(pop, init_population(&space, 50, &mut rng(1)));
        assert_eq!(init_population(&space, 2, &mut rng(1)).len(), 2);
    }

    #[test]
    fn truncation_sort_and_cut() {
        assert_eq!(ids(&select_truncation(&labeled(&[5.0, 1.0, 3.0, 9.0]), 0.5)), vec![1, 2]);
        assert_eq!(select_truncation(&labeled(&[1.0, 2.0, 3.0]), 0.5).len(), 2);
        assert_eq!(ids(&select_truncation(&labeled(&[4.0; 5]), 0.5)), vec![0, 1, 2]);
    }

    #[test]
    fn crossover_properties() {
        let space = ParameterSpace::default_space();
        let a = space.sample_uniform(&mut rng(1));
        let b = space.sample_uniform(&mut rng(2));
        assert_eq!(crossover(&a, &a, &mut rng(3)), a);
        let mut r = rng(4);
        let mut from_a = vec![0usize; a.len()];
        let n = 1000;
        for _ in 0..n {
            let child = crossover(&a, &b, &mut r);
            for i in 0..a.len() {
                assert!(child[i] == a[i] || child[i] == b[i]);
                if child[i] == a[i] && a[i] != b[i] {
                    from_a[i] += 1;
                }
            }
        }
        for (i, &k) in from_a.iter().enumerate() {
            if a[i] != b[i] {
                let frac = k as f64 / n as f64;
                assert!((frac - 0.5).abs() < 0.05, "gene {i}: {frac}");
            }
        }
    }

    #[test]
    fn mutation_properties() {
        let space = ParameterSpace::default_space();
        let c = space.sample_uniform(&mut rng(5));
        assert_eq!(mutate(&space, &c, 0.0, 0.5, &mut rng(6)), c);
        let mut r = rng(7);
        for _ in 0..200 {
            let m = mutate(&space, &c, 1.0, 10.0, &mut r);
            assert!(space.validate(&m).is_ok());
            for (v, p) in m.values().iter().zip(space.params()) {
                if p.kind == ParamKind::Integer {
                    assert_eq!(v.fract(), 0.0);
                }
            }
        }
    }

    #[test]
    fn generation_keeps_survivors_and_size() {
        let space = ParameterSpace::default_space();
        let config = GaConfig { population_size: 12, ..GaConfig::default() };
        let objective = FnObjective(sphere(&space));
        let cache = FitnessCache::new();
        let mut r = rng(8);
        let pop = init_population(&space, 12, &mut r);
        let g = step_generation(&space, &pop, &objective, &cache, &config, 0, &mut r).unwrap();
        assert_eq!(g.next.len(), 12);
        let scored: Vec<(Chromosome, f64)> = g.scored.iter().map(|(c, v)| (c.clone(), v.f)).collect();
        let survivors = select_truncation(&scored, 0.5);
        assert_eq!(&g.next[..6], &survivors[..]);
        let g2 = step_generation(&space, &g.next, &objective, &cache, &config, 1, &mut r).unwrap();
        assert!(g2.record.generation_best <= g.record.generation_best);
        assert!(g2.record.cache_hits >= 6);
        assert!(step_generation(&space, &pop[..5], &objective, &cache, &config, 0, &mut r).is_err());
    }

    #[test]
    fn constant_objective_hits_plateau() {
        let space = ParameterSpace::default_space();
        let config =
            GaConfig { population_size: 10, plateau_generations: 10, max_generations: 500, ..GaConfig::default() };
        let r = run_ga(&space, &config, &FnObjective(|_: &Chromosome| 7.0)).unwrap();
        assert_eq!(r.stop_reason, StopReason::Plateau);
        assert_eq!(r.generations_run, 11);
        assert_eq!(r.best_fitness.f, 7.0);
    }

    #[test]
    fn improving_objective_hits_cap() {
        let space = ParameterSpace::default_space();
        let config =
            GaConfig { population_size: 20, plateau_generations: 15, max_generations: 15, ..GaConfig::default() };
        let r = run_ga(&space, &config, &FnObjective(sphere(&space))).unwrap();
        assert_eq!(r.stop_reason, StopReason::MaxGenerations);
        assert_eq!(r.generations_run, 15);
    }

    #[test]
    fn sphere_improves_and_trajectory_is_monotone() {
        let space = ParameterSpace::default_space();
        let config =
            GaConfig { population_size: 30, max_generations: 100, plateau_generations: 100, ..GaConfig::default() };
        let r = run_ga(&space, &config, &FnObjective(sphere(&space))).unwrap();
        assert!(r.best_fitness.f < r.trajectory[0].generation_best);
        assert!(r.trajectory.windows(2).all(|w| w[1].best_fitness <= w[0].best_fitness));
        assert!(r.trajectory.iter().all(|g| g.best_fitness <= g.mean_fitness));
        let min_seen = r.trajectory.iter().map(|g| g.generation_best).fold(f64::INFINITY, f64::min);
        assert_eq!(r.best_fitness.f, min_seen);
    }

    #[test]
    fn evaluations_equal_distinct_chromosomes() {
        struct Counting<'a>(&'a ParameterSpace, AtomicUsize);
        impl Objective for Counting<'_> {
            fn evaluate(&self, c: &Chromosome) -> Result<FitnessValue> {
                self.1.fetch_add(1, Ordering::SeqCst);
                Ok(FitnessValue::from_score(sphere(self.0)(c)))
            }
        }
        let space = ParameterSpace::default_space();
        let config =
            GaConfig { population_size: 16, max_generations: 30, plateau_generations: 30, ..GaConfig::default() };
        let objective = Counting(&space, AtomicUsize::new(0));
        let r = run_ga(&space, &config, &objective).unwrap();
        let calls = objective.1.load(Ordering::SeqCst);
        assert_eq!(calls as u64, r.cache.misses);
        assert_eq!(calls, r.cache.entries);
        assert_eq!(calls, r.trajectory.iter().map(|g| g.evaluations).sum::<usize>());
        assert!(calls <= config.population_size * r.generations_run);
        let lookups: usize = r.trajectory.iter().map(|g| g.cache_hits + g.evaluations).sum();
        assert_eq!(lookups, config.population_size * r.generations_run);
    }

    #[test]
    fn same_seed_same_result_across_pools() {
        let space = ParameterSpace::default_space();
        let config =
            GaConfig { population_size: 20, max_generations: 25, plateau_generations: 25, ..GaConfig::default() };
        let run = |threads| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| run_ga(&space, &config, &FnObjective(sphere(&space))).unwrap())
        };
        let (a, b) = (run(1), run(4));
        assert_eq!(a.best_chromosome, b.best_chromosome);
        assert_eq!(a.trajectory, b.trajectory);
    }

    #[test]
    fn rejects_invalid_config() {
        let space = ParameterSpace::default_space();
        for bad in [
            GaConfig { population_size: 1, ..GaConfig::default() },
            GaConfig { truncation_fraction: 1.0, ..GaConfig::default() },
            GaConfig { plateau_generations: 600, ..GaConfig::default() },
        ] {
            assert!(run_ga(&space, &bad, &FnObjective(|_: &Chromosome| 1.0)).is_err());
        }
    }

    #[test]
    fn single_parameter_space_works() {
        let space = ParameterSpace::new(vec![ParameterDef::new("x", -1.0, 1.0, ParamKind::Real)]).unwrap();
        let config =
            GaConfig { population_size: 10, max_generations: 40, plateau_generations: 40, ..GaConfig::default() };
        let r = run_ga(&space, &config, &FnObjective(|c: &Chromosome| (c[0] - 0.3).powi(2))).unwrap();
        assert!((r.best_chromosome[0] - 0.3).abs() < 0.05);
    }

    proptest! {
        #[test]
        fn truncation_is_rank_based(fs in proptest::collection::vec(-1e3f64..1e3, 1..40), frac in 0.05f64..0.95) {
            let base = ids(&select_truncation(&labeled(&fs), frac));
            let transformed: Vec<f64> = fs.iter().map(|f| (f / 100.0).exp() * 3.0 + 1.0).collect();
            let mut a = base.clone();
            let mut b = ids(&select_truncation(&labeled(&transformed), frac));
            a.sort_unstable();
            b.sort_unstable();
            prop_assert_eq!(a, b);
            prop_assert_eq!(base.len(), ((frac * fs.len() as f64).ceil() as usize).clamp(1, fs.len()));
        }
    }
}
