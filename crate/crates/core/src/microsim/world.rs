use std::collections::BTreeMap;
use std::io::Write;

use rand::Rng;
use serde::Serialize;

use super::config::{SimConfig, SynthesisSpec};
use crate::error::Result;

pub type PersonId = u64;
pub type HouseholdId = u64;
pub type MunicipalityId = u32;

/// `B` is the child-bearing role.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sex {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Activity {
    Student,
    Worker,
    Unemployed,
    Inactive,
    Retired,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Individual {
    pub id: PersonId,
    pub age: u32,
    pub sex: Sex,
    pub activity: Activity,
    pub sector: Option<u32>,
    pub residence: MunicipalityId,
    pub workplace: Option<MunicipalityId>,
    pub household: HouseholdId,
    pub partner: Option<PersonId>,
}

impl Individual {
    pub(crate) fn leave_job(&mut self, next: Activity) {
        self.activity = next;
        self.sector = None;
        self.workplace = None;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Household {
    pub id: HouseholdId,
    /// Sorted ascending.
    pub members: Vec<PersonId>,
    pub municipality: MunicipalityId,
    pub rooms: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Municipality {
    pub id: MunicipalityId,
    pub district: u32,
    /// Job positions per sector.
    pub job_slots: Vec<u32>,
    /// Positions per sector held by workers living outside the region.
    pub in_commuters: Vec<u32>,
    /// Vacant dwellings indexed by `rooms - 1`.
    pub vacant_dwellings: Vec<u32>,
}

/// Demographic events of the current simulated year, per municipality.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventCounters {
    pub births: Vec<u32>,
    pub deaths: Vec<u32>,
    pub out_migrations: Vec<u32>,
}

impl EventCounters {
    fn zeroed(n: usize) -> Self {
        Self { births: vec![0; n], deaths: vec![0; n], out_migrations: vec![0; n] }
    }

    pub fn total_births(&self) -> u64 {
        self.births.iter().map(|&v| u64::from(v)).sum()
    }

    pub fn total_deaths(&self) -> u64 {
        self.deaths.iter().map(|&v| u64::from(v)).sum()
    }

    pub fn total_out_migrations(&self) -> u64 {
        self.out_migrations.iter().map(|&v| u64::from(v)).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub year: i32,
    pub individuals: BTreeMap<PersonId, Individual>,
    pub households: BTreeMap<HouseholdId, Household>,
    pub municipalities: Vec<Municipality>,
    pub events: EventCounters,
    next_person: PersonId,
    next_household: HouseholdId,
}

#[derive(Serialize)]
#[serde(tag = "record", rename_all = "lowercase")]
enum SnapshotRecord<'a> {
    Municipality(&'a Municipality),
    Household(&'a Household),
    Individual(&'a Individual),
}

impl WorldState {
    /// Builds a synthetic region. Households of one to four members are
    /// composed as a single adult, a couple, or a couple with children.
    pub fn init(cfg: &SimConfig, rng: &mut impl Rng) -> Result<Self> {
        cfg.validate()?;
        let syn = &cfg.synthesis;
        let dyn_ = &cfg.dynamics;
        let n_muni = syn.municipalities;
        let mut world = WorldState {
            year: cfg.start_year,
            individuals: BTreeMap::new(),
            households: BTreeMap::new(),
            municipalities: (0..n_muni)
                .map(|m| Municipality {
                    id: m as MunicipalityId,
                    district: syn.district_of(m),
                    job_slots: vec![0; syn.sectors],
                    in_commuters: vec![0; syn.sectors],
                    vacant_dwellings: vec![0; dyn_.max_rooms as usize],
                })
                .collect(),
            events: EventCounters::zeroed(n_muni),
            next_person: 0,
            next_household: 0,
        };

        let size_total: f64 = syn.household_size_weights.iter().sum();
        for m in 0..n_muni as MunicipalityId {
            let mut placed = 0;
            let mut households_here = 0;
            while placed < syn.individuals_per_municipality {
                let remaining = syn.individuals_per_municipality - placed;
                let size = draw_weighted(rng, &syn.household_size_weights, size_total) + 1;
                let size = size.min(remaining);
                world.synthesize_household(cfg, m, size, rng);
                placed += size;
                households_here += 1;
            }
            let vacancies = (households_here as f64 * syn.vacancy_share).round() as usize;
            let muni = &mut world.municipalities[m as usize];
            for _ in 0..vacancies {
                let rooms = rng.random_range(1..=dyn_.max_rooms);
                muni.vacant_dwellings[rooms as usize - 1] += 1;
            }
        }

        let mut occupied = vec![vec![0u32; syn.sectors]; n_muni];
        for p in world.individuals.values() {
            if let (Some(w), Some(s)) = (p.workplace, p.sector) {
                occupied[w as usize][s as usize] += 1;
            }
        }
        for (muni, occ) in world.municipalities.iter_mut().zip(occupied) {
            muni.job_slots = occ.iter().map(|&o| (f64::from(o) * (1.0 + syn.job_slack)).ceil() as u32).collect();
        }
        Ok(world)
    }

    fn synthesize_household(&mut self, cfg: &SimConfig, m: MunicipalityId, size: usize, rng: &mut impl Rng) {
        let syn = &cfg.synthesis;
        let hid = self.next_household;
        self.next_household += 1;
        let head_age = draw_adult_age(syn, rng);
        let mut ages_sexes = Vec::with_capacity(size);
        if size == 1 {
            let sex = if rng.random_bool(0.5) { Sex::A } else { Sex::B };
            ages_sexes.push((head_age, sex));
        } else {
            let partner_age =
                head_age.saturating_add_signed(rng.random_range(-3..=5)).clamp(cfg.dynamics.adult_age, 95);
            ages_sexes.push((head_age, Sex::B));
            ages_sexes.push((partner_age, Sex::A));
            let oldest_child = head_age - cfg.dynamics.adult_age;
            let youngest_child = head_age.saturating_sub(45).min(oldest_child);
            for _ in 2..size {
                let sex = if rng.random_bool(0.5) { Sex::A } else { Sex::B };
                ages_sexes.push((rng.random_range(youngest_child..=oldest_child), sex));
            }
        }

        let first = self.next_person;
        let mut members = Vec::with_capacity(size);
        for (i, (age, sex)) in ages_sexes.into_iter().enumerate() {
            let id = self.next_person;
            self.next_person += 1;
            let partner = match (size, i) {
                (1, _) => None,
                (_, 0) => Some(first + 1),
                (_, 1) => Some(first),
                _ => None,
            };
            let mut person = Individual {
                id,
                age,
                sex,
                activity: Activity::Inactive,
                sector: None,
                residence: m,
                workplace: None,
                household: hid,
                partner,
            };
            assign_initial_activity(&mut person, cfg, rng);
            self.individuals.insert(id, person);
            members.push(id);
        }
        let max_rooms = cfg.dynamics.max_rooms as i64;
        let rooms = (size as i64 + rng.random_range(-1..=1)).clamp(1, max_rooms) as u32;
        self.households.insert(hid, Household { id: hid, members, municipality: m, rooms });
    }

    pub(crate) fn new_person_id(&mut self) -> PersonId {
        let id = self.next_person;
        self.next_person += 1;
        id
    }

    pub(crate) fn new_household_id(&mut self) -> HouseholdId {
        let id = self.next_household;
        self.next_household += 1;
        id
    }

    pub(crate) fn reset_events(&mut self) {
        self.events = EventCounters::zeroed(self.municipalities.len());
    }

    /// Removes a person from the world, dissolving their partnership and
    /// releasing the dwelling if the household becomes empty.
    pub(crate) fn remove_individual(&mut self, id: PersonId) -> Option<Individual> {
        let person = self.individuals.remove(&id)?;
        if let Some(partner) = person.partner.and_then(|p| self.individuals.get_mut(&p)) {
            partner.partner = None;
        }
        let hh = self.households.get_mut(&person.household).expect("member of a missing household");
        hh.members.retain(|&m| m != id);
        if hh.members.is_empty() {
            let hh = self.households.remove(&person.household).unwrap();
            self.release_dwelling(hh.municipality, hh.rooms);
        }
        Some(person)
    }

    pub(crate) fn release_dwelling(&mut self, m: MunicipalityId, rooms: u32) {
        self.municipalities[m as usize].vacant_dwellings[rooms as usize - 1] += 1;
    }

    /// Number of individuals per municipality in each sector whose workplace
    /// is in that municipality.
    pub fn resident_workers_by_workplace(&self) -> Vec<Vec<u32>> {
        let mut occ: Vec<Vec<u32>> = self.municipalities.iter().map(|m| vec![0; m.job_slots.len()]).collect();
        for p in self.individuals.values() {
            if let (Some(w), Some(s)) = (p.workplace, p.sector) {
                occ[w as usize][s as usize] += 1;
            }
        }
        occ
    }

    pub fn total_job_slots(&self) -> u64 {
        self.municipalities.iter().flat_map(|m| &m.job_slots).map(|&s| u64::from(s)).sum()
    }

    /// Verifies referential integrity and job-slot capacity, returning the
    /// first inconsistency found.
    pub fn check_integrity(&self) -> std::result::Result<(), String> {
        let n_muni = self.municipalities.len() as MunicipalityId;
        for p in self.individuals.values() {
            let hh = self.households.get(&p.household).ok_or(format!("person {} has no household", p.id))?;
            if hh.members.binary_search(&p.id).is_err() {
                return Err(format!("person {} not listed in household {}", p.id, hh.id));
            }
            if p.residence != hh.municipality {
                return Err(format!("person {} lives apart from household {}", p.id, hh.id));
            }
            let working = p.activity == Activity::Worker;
            if working != (p.sector.is_some() && p.workplace.is_some()) {
                return Err(format!("person {} worker status disagrees with job fields", p.id));
            }
            if p.workplace.is_some_and(|w| w >= n_muni) {
                return Err(format!("person {} works in unknown municipality", p.id));
            }
            if let Some(q) = p.partner {
                let partner = self.individuals.get(&q).ok_or(format!("person {} partner {} missing", p.id, q))?;
                if partner.partner != Some(p.id) || partner.household != p.household {
                    return Err(format!("partnership {}-{} is not mutual within one household", p.id, q));
                }
            }
        }
        for hh in self.households.values() {
            if hh.members.is_empty() {
                return Err(format!("household {} is empty", hh.id));
            }
            if hh.members.windows(2).any(|w| w[0] >= w[1]) {
                return Err(format!("household {} member list is not sorted", hh.id));
            }
            if hh.municipality >= n_muni || hh.rooms < 1 {
                return Err(format!("household {} has invalid dwelling", hh.id));
            }
            for m in &hh.members {
                match self.individuals.get(m) {
                    Some(p) if p.household == hh.id => {}
                    _ => return Err(format!("household {} lists foreign member {}", hh.id, m)),
                }
            }
        }
        let occ = self.resident_workers_by_workplace();
        for (muni, occ) in self.municipalities.iter().zip(occ) {
            for (s, (&slots, &filled)) in muni.job_slots.iter().zip(&occ).enumerate() {
                if filled + muni.in_commuters[s] > slots {
                    return Err(format!("municipality {} sector {} over capacity", muni.id, s));
                }
            }
        }
        Ok(())
    }

    /// Writes the world as line-delimited JSON: one record per municipality,
    /// household and individual, each tagged with a `record` field.
    pub fn write_snapshot<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for m in &self.municipalities {
            serde_json::to_writer(&mut w, &SnapshotRecord::Municipality(m))?;
            writeln!(w)?;
        }
        for h in self.households.values() {
            serde_json::to_writer(&mut w, &SnapshotRecord::Household(h))?;
            writeln!(w)?;
        }
        for p in self.individuals.values() {
            serde_json::to_writer(&mut w, &SnapshotRecord::Individual(p))?;
            writeln!(w)?;
        }
        Ok(())
    }
}

fn draw_weighted(rng: &mut impl Rng, weights: &[f64], total: f64) -> usize {
    let mut u = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if u < w {
            return i;
        }
        u -= w;
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

fn draw_adult_age(syn: &SynthesisSpec, rng: &mut impl Rng) -> u32 {
    let weights: Vec<f64> = syn.adult_age_bands.iter().map(|b| b.weight).collect();
    let band = &syn.adult_age_bands[draw_weighted(rng, &weights, weights.iter().sum())];
    rng.random_range(band.lower..=band.upper)
}

fn assign_initial_activity(p: &mut Individual, cfg: &SimConfig, rng: &mut impl Rng) {
    let d = &cfg.dynamics;
    let syn = &cfg.synthesis;
    p.activity = if p.age < d.school_age {
        Activity::Inactive
    } else if p.age < d.higher_education_age {
        Activity::Student
    } else if p.age >= d.retirement_age {
        Activity::Retired
    } else {
        let u = rng.random::<f64>();
        if u < syn.employment_share {
            Activity::Worker
        } else if u < syn.employment_share + syn.unemployment_share {
            Activity::Unemployed
        } else {
            Activity::Inactive
        }
    };
    if p.activity == Activity::Worker {
        p.sector = Some(rng.random_range(0..syn.sectors as u32));
        let elsewhere = syn.municipalities > 1 && rng.random_bool(0.15);
        p.workplace =
            Some(if elsewhere { rng.random_range(0..syn.municipalities as MunicipalityId) } else { p.residence });
    }
}
