//! One simulated year. Sub-processes run in a fixed order so a seeded run is
//! reproducible: aging, deaths, births, couple formation, household
//! splitting, residence change, student out-migration, labor market.

use rand::seq::IndexedRandom;
use rand::Rng;

use super::config::SimConfig;
use super::world::{Activity, Household, HouseholdId, Individual, MunicipalityId, PersonId, Sex, WorldState};
use crate::param_space::{self as ps, Chromosome};

/// Typed view of a chromosome in canonical order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub age_min_having_child: u32,
    pub age_max_having_child: u32,
    pub nb_child: f64,
    pub probability_to_make_couple: f64,
    pub nb_join_trials: u32,
    pub splitting_proba: f64,
    pub prob_to_accept_new_residence: f64,
    pub res_satisfact_margin: u32,
    pub prob_study_outside: f64,
    pub prob_looking_regional_jobs: f64,
    pub job_vacancy_rate: f64,
}

impl ModelParams {
    /// Interprets a chromosome laid out like [`ParameterSpace::default_space`](crate::param_space::ParameterSpace::default_space).
    pub fn from_chromosome(c: &Chromosome) -> Self {
        assert_eq!(c.len(), ps::GENES, "chromosome must carry {} genes", ps::GENES);
        let whole = |i: usize| c[i].round().max(0.0) as u32;
        let prob = |i: usize| c[i].clamp(0.0, 1.0);
        Self {
            age_min_having_child: whole(ps::AGE_MIN_HAVING_CHILD),
            age_max_having_child: whole(ps::AGE_MAX_HAVING_CHILD),
            nb_child: c[ps::NB_CHILD].max(0.0),
            probability_to_make_couple: prob(ps::PROBABILITY_TO_MAKE_COUPLE),
            nb_join_trials: whole(ps::NB_JOIN_TRIALS),
            splitting_proba: prob(ps::SPLITTING_PROBA),
            prob_to_accept_new_residence: prob(ps::PROB_TO_ACCEPT_NEW_RESIDENCE),
            res_satisfact_margin: whole(ps::RES_SATISFACT_MARGIN),
            prob_study_outside: prob(ps::PROB_STUDY_OUTSIDE),
            prob_looking_regional_jobs: prob(ps::PROB_LOOKING_REGIONAL_JOBS),
            job_vacancy_rate: c[ps::JOB_VACANCY_RATE].max(0.0),
        }
    }

    /// Yearly birth probability of a couple in the fertile window, chosen so
    /// that a couple spending the whole window together expects `nb_child`
    /// children: `p = nb_child / (age_max - age_min + 1)`, capped at 1.
    pub fn yearly_birth_probability(&self) -> f64 {
        if self.age_max_having_child < self.age_min_having_child {
            return 0.0;
        }
        let window = f64::from(self.age_max_having_child - self.age_min_having_child + 1);
        (self.nb_child / window).min(1.0)
    }
}

/// Counts of the non-indicator events of one step, for tests and diagnostics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub couples_formed: u32,
    pub splits: u32,
    pub moves: u32,
    pub hires: u32,
}

/// Advances the world by one year.
pub fn step_year(world: &mut WorldState, cfg: &SimConfig, params: &ModelParams, rng: &mut impl Rng) -> StepStats {
    let mut stats = StepStats::default();
    world.reset_events();
    age(world, cfg);
    deaths(world, cfg, rng);
    births(world, cfg, params, rng);
    stats.couples_formed = form_couples(world, cfg, params, rng);
    stats.splits = split_households(world, cfg, params, rng);
    stats.moves = change_residence(world, cfg, params, rng);
    student_migration(world, cfg, params, rng);
    stats.hires = labor_market(world, cfg, params, rng);
    world.year += 1;
    stats
}

fn age(world: &mut WorldState, cfg: &SimConfig) {
    let d = &cfg.dynamics;
    for p in world.individuals.values_mut() {
        p.age = (p.age + 1).min(d.max_age);
        if p.activity == Activity::Inactive && p.age == d.school_age {
            p.activity = Activity::Student;
        }
    }
}

fn deaths(world: &mut WorldState, cfg: &SimConfig, rng: &mut impl Rng) {
    let dead: Vec<(PersonId, MunicipalityId)> = world
        .individuals
        .values()
        .filter(|p| {
            let h = cfg.dynamics.hazard(p.age);
            h > 0.0 && rng.random::<f64>() < h
        })
        .map(|p| (p.id, p.residence))
        .collect();
    for (id, m) in dead {
        world.remove_individual(id);
        world.events.deaths[m as usize] += 1;
    }
}

fn births(world: &mut WorldState, cfg: &SimConfig, params: &ModelParams, rng: &mut impl Rng) {
    let p_birth = params.yearly_birth_probability();
    if p_birth <= 0.0 {
        return;
    }
    let mothers: Vec<(HouseholdId, MunicipalityId)> = world
        .individuals
        .values()
        .filter(|p| {
            p.sex == Sex::B
                && p.partner.is_some()
                && (params.age_min_having_child..=params.age_max_having_child).contains(&p.age)
        })
        .filter(|_| rng.random::<f64>() < p_birth)
        .map(|p| (p.household, p.residence))
        .collect();
    for (hid, m) in mothers {
        let id = world.new_person_id();
        let sex = if rng.random_bool(0.5) { Sex::A } else { Sex::B };
        let activity = if cfg.dynamics.school_age == 0 { Activity::Student } else { Activity::Inactive };
        world.individuals.insert(
            id,
            Individual {
                id,
                age: 0,
                sex,
                activity,
                sector: None,
                residence: m,
                workplace: None,
                household: hid,
                partner: None,
            },
        );
        // New ids are the largest so far, so pushing keeps members sorted.
        world.households.get_mut(&hid).unwrap().members.push(id);
        world.events.births[m as usize] += 1;
    }
}

/// Each single adult makes up to `nb_join_trials` attempts; every attempt
/// meets a random single of the other sex from another household and is
/// accepted with `probability_to_make_couple`. The smaller of the two
/// households moves in with the larger one.
fn form_couples(world: &mut WorldState, cfg: &SimConfig, params: &ModelParams, rng: &mut impl Rng) -> u32 {
    let p = params.probability_to_make_couple;
    if p <= 0.0 || params.nb_join_trials == 0 {
        return 0;
    }
    let d = &cfg.dynamics;
    let eligible = |q: &Individual| q.partner.is_none() && (d.adult_age..=d.max_partnering_age).contains(&q.age);
    let singles: Vec<(PersonId, Sex)> =
        world.individuals.values().filter(|q| eligible(q)).map(|q| (q.id, q.sex)).collect();
    let pool_a: Vec<PersonId> = singles.iter().filter(|s| s.1 == Sex::A).map(|s| s.0).collect();
    let pool_b: Vec<PersonId> = singles.iter().filter(|s| s.1 == Sex::B).map(|s| s.0).collect();

    let mut formed = 0;
    for &(id, sex) in &singles {
        if world.individuals[&id].partner.is_some() {
            continue;
        }
        let pool = if sex == Sex::A { &pool_b } else { &pool_a };
        for _ in 0..params.nb_join_trials {
            let Some(&other) = pool.choose(rng) else { break };
            let accepted = rng.random::<f64>() < p;
            let (me, them) = (&world.individuals[&id], &world.individuals[&other]);
            if them.partner.is_some() || them.household == me.household || !accepted {
                continue;
            }
            merge_households(world, id, other);
            world.individuals.get_mut(&id).unwrap().partner = Some(other);
            world.individuals.get_mut(&other).unwrap().partner = Some(id);
            formed += 1;
            break;
        }
    }
    formed
}

fn merge_households(world: &mut WorldState, a: PersonId, b: PersonId) {
    let ha = world.individuals[&a].household;
    let hb = world.individuals[&b].household;
    let (size_a, size_b) = (world.households[&ha].members.len(), world.households[&hb].members.len());
    let (keep, gone) = if size_a > size_b || (size_a == size_b && ha < hb) { (ha, hb) } else { (hb, ha) };
    let gone = world.households.remove(&gone).unwrap();
    world.release_dwelling(gone.municipality, gone.rooms);
    let dest = world.households.get_mut(&keep).unwrap();
    let m = dest.municipality;
    for id in &gone.members {
        let p = world.individuals.get_mut(id).unwrap();
        p.household = keep;
        p.residence = m;
    }
    dest.members.extend(gone.members);
    dest.members.sort_unstable();
}

/// A splitting household loses one adult: an unpartnered adult if another
/// adult stays behind, otherwise the `A` partner of a couple (divorce).
fn split_households(world: &mut WorldState, cfg: &SimConfig, params: &ModelParams, rng: &mut impl Rng) -> u32 {
    let p = params.splitting_proba;
    if p <= 0.0 {
        return 0;
    }
    let adult = cfg.dynamics.adult_age;
    let candidates: Vec<HouseholdId> =
        world.households.values().filter(|h| h.members.len() >= 2).map(|h| h.id).collect();
    let mut splits = 0;
    for hid in candidates {
        if rng.random::<f64>() >= p {
            continue;
        }
        let hh = &world.households[&hid];
        let members: Vec<&Individual> = hh.members.iter().map(|id| &world.individuals[id]).collect();
        let adults = members.iter().filter(|q| q.age >= adult).count();
        let leaver = members
            .iter()
            .filter(|q| q.age >= adult && q.partner.is_none())
            .min_by_key(|q| (q.age, q.id))
            .filter(|_| adults >= 2)
            .or_else(|| members.iter().find(|q| q.partner.is_some() && q.sex == Sex::A))
            .map(|q| q.id);
        let Some(leaver) = leaver else { continue };
        let m = hh.municipality;

        if let Some(partner) = world.individuals[&leaver].partner {
            world.individuals.get_mut(&partner).unwrap().partner = None;
        }
        let new_id = world.new_household_id();
        let rooms = take_dwelling_at(world, m, 1).unwrap_or(1);
        world.households.get_mut(&hid).unwrap().members.retain(|&q| q != leaver);
        let person = world.individuals.get_mut(&leaver).unwrap();
        person.partner = None;
        person.household = new_id;
        world.households.insert(new_id, Household { id: new_id, members: vec![leaver], municipality: m, rooms });
        splits += 1;
    }
    splits
}

/// Takes the smallest vacant dwelling with at least `min_rooms` rooms, or the
/// largest available one, and returns its size.
fn take_dwelling_at(world: &mut WorldState, m: MunicipalityId, min_rooms: u32) -> Option<u32> {
    let vac = &mut world.municipalities[m as usize].vacant_dwellings;
    let idx = (min_rooms as usize - 1..vac.len())
        .find(|&i| vac[i] > 0)
        .or_else(|| (0..vac.len()).rev().find(|&i| vac[i] > 0))?;
    vac[idx] -= 1;
    Some(idx as u32 + 1)
}

fn rooms_needed(size: usize, max_rooms: u32) -> u32 {
    (size as u32).clamp(1, max_rooms)
}

/// Households whose room count differs from their size by more than
/// `res_satisfact_margin` inspect random vacant dwellings anywhere in the
/// region and take a fitting one with `prob_to_accept_new_residence`.
fn change_residence(world: &mut WorldState, cfg: &SimConfig, params: &ModelParams, rng: &mut impl Rng) -> u32 {
    let margin = params.res_satisfact_margin;
    let max_rooms = cfg.dynamics.max_rooms;
    let unhappy: Vec<HouseholdId> = world
        .households
        .values()
        .filter(|h| rooms_needed(h.members.len(), max_rooms).abs_diff(h.rooms) > margin)
        .map(|h| h.id)
        .collect();
    let mut moves = 0;
    for hid in unhappy {
        let need = rooms_needed(world.households[&hid].members.len(), max_rooms);
        for _ in 0..cfg.dynamics.dwelling_search_draws {
            let Some((m, rooms)) = random_vacancy(world, rng) else { break };
            if rooms.abs_diff(need) > margin {
                continue;
            }
            if rng.random::<f64>() < params.prob_to_accept_new_residence {
                let hh = world.households.get_mut(&hid).unwrap();
                let (old_m, old_rooms) = (hh.municipality, hh.rooms);
                hh.municipality = m;
                hh.rooms = rooms;
                let members = hh.members.clone();
                world.municipalities[m as usize].vacant_dwellings[rooms as usize - 1] -= 1;
                world.release_dwelling(old_m, old_rooms);
                for id in members {
                    world.individuals.get_mut(&id).unwrap().residence = m;
                }
                moves += 1;
            }
            break;
        }
    }
    moves
}

fn random_vacancy(world: &WorldState, rng: &mut impl Rng) -> Option<(MunicipalityId, u32)> {
    let total: u32 = world.municipalities.iter().flat_map(|m| &m.vacant_dwellings).sum();
    if total == 0 {
        return None;
    }
    let mut k = rng.random_range(0..total);
    for muni in &world.municipalities {
        for (i, &v) in muni.vacant_dwellings.iter().enumerate() {
            if k < v {
                return Some((muni.id, i as u32 + 1));
            }
            k -= v;
        }
    }
    unreachable!("vacancy index out of range")
}

/// Students reaching higher-education age leave the region with
/// `prob_study_outside`; the rest enter the labor market as job seekers.
fn student_migration(world: &mut WorldState, cfg: &SimConfig, params: &ModelParams, rng: &mut impl Rng) {
    let age = cfg.dynamics.higher_education_age;
    let graduates: Vec<PersonId> =
        world.individuals.values().filter(|p| p.activity == Activity::Student && p.age >= age).map(|p| p.id).collect();
    for id in graduates {
        if params.prob_study_outside > 0.0 && rng.random::<f64>() < params.prob_study_outside {
            let person = world.remove_individual(id).unwrap();
            world.events.out_migrations[person.residence as usize] += 1;
        } else {
            world.individuals.get_mut(&id).unwrap().activity = Activity::Unemployed;
        }
    }
}

/// Retirement, job separations, job creation at `job_vacancy_rate`, job
/// search (local first, then regional with `prob_looking_regional_jobs`), and
/// finally in-commuters filling a share of what is left vacant.
fn labor_market(world: &mut WorldState, cfg: &SimConfig, params: &ModelParams, rng: &mut impl Rng) -> u32 {
    let d = &cfg.dynamics;
    for p in world.individuals.values_mut() {
        if p.age >= d.retirement_age
            && matches!(p.activity, Activity::Worker | Activity::Unemployed | Activity::Inactive)
        {
            p.leave_job(Activity::Retired);
        } else if p.activity == Activity::Worker && rng.random::<f64>() < d.job_separation_rate {
            p.leave_job(Activity::Unemployed);
        }
    }

    if params.job_vacancy_rate > 0.0 {
        for muni in &mut world.municipalities {
            for slots in &mut muni.job_slots {
                let grow = f64::from(*slots) * params.job_vacancy_rate;
                let whole = grow.floor();
                let extra = u32::from(rng.random::<f64>() < grow - whole);
                *slots = slots.saturating_add(whole as u32 + extra);
            }
        }
    }

    let mut vacant: Vec<Vec<u32>> = world
        .resident_workers_by_workplace()
        .into_iter()
        .zip(&world.municipalities)
        .map(|(occ, m)| m.job_slots.iter().zip(occ).map(|(&s, o)| s - o).collect())
        .collect();

    let seekers: Vec<PersonId> =
        world.individuals.values().filter(|p| p.activity == Activity::Unemployed).map(|p| p.id).collect();
    let mut hires = 0;
    for id in seekers {
        let home = world.individuals[&id].residence as usize;
        let job = pick_vacancy(&vacant, rng, |m| m == home).or_else(|| {
            (params.prob_looking_regional_jobs > 0.0 && rng.random::<f64>() < params.prob_looking_regional_jobs)
                .then(|| pick_vacancy(&vacant, rng, |m| m != home))
                .flatten()
        });
        if let Some((m, s)) = job {
            vacant[m][s] -= 1;
            let p = world.individuals.get_mut(&id).unwrap();
            p.activity = Activity::Worker;
            p.sector = Some(s as u32);
            p.workplace = Some(m as MunicipalityId);
            hires += 1;
        }
    }

    for (muni, vac) in world.municipalities.iter_mut().zip(vacant) {
        for (c, v) in muni.in_commuters.iter_mut().zip(vac) {
            *c = (f64::from(v) * d.commuter_share).floor() as u32;
        }
    }
    hires
}

/// Uniform draw over the vacant positions of the admitted municipalities.
fn pick_vacancy(vacant: &[Vec<u32>], rng: &mut impl Rng, admit: impl Fn(usize) -> bool) -> Option<(usize, usize)> {
    let total: u32 = vacant.iter().enumerate().filter(|(m, _)| admit(*m)).flat_map(|(_, v)| v).sum();
    if total == 0 {
        return None;
    }
    let mut k = rng.random_range(0..total);
    for (m, sectors) in vacant.iter().enumerate().filter(|(m, _)| admit(*m)) {
        for (s, &v) in sectors.iter().enumerate() {
            if k < v {
                return Some((m, s));
            }
            k -= v;
        }
    }
    unreachable!("vacancy index out of range")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::param_space::ParameterSpace;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(muni: usize, people: usize) -> (SimConfig, WorldState, ChaCha8Rng) {
        let cfg = SimConfig::tiny(muni, people);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let world = WorldState::init(&cfg, &mut rng).unwrap();
        (cfg, world, rng)
    }

    fn params_with(edit: impl FnOnce(&mut Vec<f64>)) -> ModelParams {
        let mut v = ParameterSpace::default_space().midpoints().values().to_vec();
        edit(&mut v);
        ModelParams::from_chromosome(&Chromosome::new(v))
    }

    #[test]
    fn zero_couple_probability_forms_no_couples() {
        let (cfg, mut world, mut rng) = setup(2, 400);
        let params = params_with(|v| v[ps::PROBABILITY_TO_MAKE_COUPLE] = 0.0);
        for _ in 0..5 {
            assert_eq!(step_year(&mut world, &cfg, &params, &mut rng).couples_formed, 0);
        }
        let positive = params_with(|v| v[ps::PROBABILITY_TO_MAKE_COUPLE] = 0.05);
        let formed: u32 = (0..5).map(|_| step_year(&mut world, &cfg, &positive, &mut rng).couples_formed).sum();
        assert!(formed > 0);
    }

    #[test]
    fn zero_split_and_study_probabilities() {
        let (cfg, mut world, mut rng) = setup(2, 400);
        let params = params_with(|v| {
            v[ps::SPLITTING_PROBA] = 0.0;
            v[ps::PROB_STUDY_OUTSIDE] = 0.0;
            v[ps::PROBABILITY_TO_MAKE_COUPLE] = 0.0;
        });
        for _ in 0..5 {
            let before = world.households.len();
            let stats = step_year(&mut world, &cfg, &params, &mut rng);
            assert_eq!(stats.splits, 0);
            assert_eq!(world.events.total_out_migrations(), 0);
            // Only deaths can remove a household when nobody couples or splits.
            assert!(world.households.len() + world.events.total_deaths() as usize >= before);
        }
    }

    #[test]
    fn zero_vacancy_rate_keeps_job_slots() {
        let (cfg, mut world, mut rng) = setup(2, 300);
        let params = params_with(|v| v[ps::JOB_VACANCY_RATE] = 0.0);
        for _ in 0..3 {
            let before = world.total_job_slots();
            step_year(&mut world, &cfg, &params, &mut rng);
            assert_eq!(world.total_job_slots(), before);
        }
        let params = params_with(|v| v[ps::JOB_VACANCY_RATE] = 1.0);
        let before = world.total_job_slots();
        step_year(&mut world, &cfg, &params, &mut rng);
        assert_eq!(world.total_job_slots(), 2 * before);
    }

    #[test]
    fn integrity_and_accounting_hold_every_step() {
        let (cfg, mut world, mut rng) = setup(3, 300);
        let space = ParameterSpace::default_space();
        for year in 0..10 {
            let params = ModelParams::from_chromosome(&space.sample_uniform(&mut rng));
            let before = world.individuals.len() as i64;
            step_year(&mut world, &cfg, &params, &mut rng);
            world.check_integrity().unwrap_or_else(|e| panic!("year {year}: {e}"));
            let e = &world.events;
            let expected = before + e.total_births() as i64 - e.total_deaths() as i64 - e.total_out_migrations() as i64;
            assert_eq!(world.individuals.len() as i64, expected);
        }
        assert_eq!(world.year, 2010);
    }

    #[test]
    fn birth_probability_matches_family_size() {
        let p = params_with(|v| {
            v[ps::AGE_MIN_HAVING_CHILD] = 20.0;
            v[ps::AGE_MAX_HAVING_CHILD] = 44.0;
            v[ps::NB_CHILD] = 2.0;
        });
        assert!((p.yearly_birth_probability() - 2.0 / 25.0).abs() < 1e-15);
    }

    #[test]
    fn expected_births_by_simulation() {
        // Count births over many single-year steps from identical starts and
        // compare against the sum of per-mother probabilities.
        let cfg = SimConfig::tiny(1, 600);
        let params = params_with(|v| {
            v[ps::NB_CHILD] = 5.0;
            v[ps::PROBABILITY_TO_MAKE_COUPLE] = 0.0;
        });
        let base = WorldState::init(&cfg, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let mut aged = base.clone();
        age(&mut aged, &cfg);
        let mothers = aged
            .individuals
            .values()
            .filter(|p| p.sex == Sex::B && p.partner.is_some())
            .filter(|p| (params.age_min_having_child..=params.age_max_having_child).contains(&p.age))
            .count() as f64;
        let trials = 400;
        let mut births_total = 0u64;
        for t in 0..trials {
            let mut w = base.clone();
            let mut no_death = cfg.clone();
            no_death.dynamics.mortality = false;
            step_year(&mut w, &no_death, &params, &mut ChaCha8Rng::seed_from_u64(1000 + t));
            births_total += w.events.total_births();
        }
        let expected = mothers * params.yearly_birth_probability();
        let observed = births_total as f64 / trials as f64;
        let sd = (expected * (1.0 - params.yearly_birth_probability()) / trials as f64).sqrt();
        assert!((observed - expected).abs() < 4.0 * sd, "observed {observed}, expected {expected}");
    }
}
