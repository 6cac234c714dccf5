use std::collections::BTreeMap;

use super::config::SimConfig;
use super::world::{Activity, WorldState};
use crate::fitness::series::{Indicator, IndicatorKey, IndicatorSeries, BIRTHS, DEATHS};

/// Household size classes: 1, 2, 3, 4 or more members.
pub const HOUSEHOLD_SIZE_CLASSES: u32 = 4;

/// Emits every indicator for the world's current year. Municipality-level
/// indicators are counts; household structure and sector of activity are
/// percentages over the municipalities of each district. Every key is emitted
/// even when its value is zero.
pub fn extract_indicators(world: &WorldState, cfg: &SimConfig) -> IndicatorSeries {
    let year = world.year;
    let n_bins = cfg.age_bins.len();
    let n_muni = world.municipalities.len();
    let n_sectors = world.municipalities.first().map_or(0, |m| m.job_slots.len());

    let mut age_structure = vec![vec![0u32; n_bins]; n_muni];
    let mut employment = vec![vec![0u32; n_bins]; n_muni];
    let mut unemployment = vec![vec![0u32; n_bins]; n_muni];
    let mut workplace: Vec<u32> = world.municipalities.iter().map(|m| m.in_commuters.iter().sum()).collect();
    let mut sector_by_district: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    let mut hh_by_district: BTreeMap<u32, [u32; HOUSEHOLD_SIZE_CLASSES as usize]> = BTreeMap::new();
    for m in &world.municipalities {
        sector_by_district.entry(m.district).or_insert_with(|| vec![0; n_sectors]);
        hh_by_district.entry(m.district).or_default();
    }

    for p in world.individuals.values() {
        let m = p.residence as usize;
        let bin = cfg.age_bin(p.age) as usize;
        age_structure[m][bin] += 1;
        match p.activity {
            Activity::Worker => {
                employment[m][bin] += 1;
                if let (Some(w), Some(s)) = (p.workplace, p.sector) {
                    workplace[w as usize] += 1;
                    let district = world.municipalities[m].district;
                    sector_by_district.get_mut(&district).unwrap()[s as usize] += 1;
                }
            }
            Activity::Unemployed => unemployment[m][bin] += 1,
            _ => {}
        }
    }
    for h in world.households.values() {
        let district = world.municipalities[h.municipality as usize].district;
        let class = h.members.len().clamp(1, HOUSEHOLD_SIZE_CLASSES as usize) - 1;
        hh_by_district.get_mut(&district).unwrap()[class] += 1;
    }

    let mut out = IndicatorSeries::new();
    let count = |v: u32| f64::from(v);
    for m in 0..n_muni {
        let id = world.municipalities[m].id;
        for b in 0..n_bins {
            out.insert(IndicatorKey::new(Indicator::AgeStructure, b as u32, id, year), count(age_structure[m][b]));
            out.insert(IndicatorKey::new(Indicator::Employment, b as u32, id, year), count(employment[m][b]));
            out.insert(IndicatorKey::new(Indicator::Unemployment, b as u32, id, year), count(unemployment[m][b]));
        }
        out.insert(IndicatorKey::new(Indicator::BirthsDeaths, BIRTHS, id, year), count(world.events.births[m]));
        out.insert(IndicatorKey::new(Indicator::BirthsDeaths, DEATHS, id, year), count(world.events.deaths[m]));
        out.insert(IndicatorKey::new(Indicator::OutMigration, 0, id, year), count(world.events.out_migrations[m]));
        out.insert(IndicatorKey::new(Indicator::Workplace, 0, id, year), count(workplace[m]));
    }
    for (district, classes) in hh_by_district {
        for (c, pct) in percentages(&classes).into_iter().enumerate() {
            out.insert(IndicatorKey::new(Indicator::HouseholdStructure, c as u32, district, year), pct);
        }
    }
    for (district, sectors) in sector_by_district {
        for (s, pct) in percentages(&sectors).into_iter().enumerate() {
            out.insert(IndicatorKey::new(Indicator::SectorOfActivity, s as u32, district, year), pct);
        }
    }
    out
}

/// Shares in percent; all zeros when the total is zero.
fn percentages(counts: &[u32]) -> Vec<f64> {
    let total: u32 = counts.iter().sum();
    if total == 0 {
        return vec![0.0; counts.len()];
    }
    counts.iter().map(|&c| 100.0 * f64::from(c) / f64::from(total)).collect()
}
