use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Settings for one simulation run. Everything except the calibration
/// parameters lives here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub start_year: i32,
    pub steps: u32,
    /// Repetition `i` draws from stream `i` of a generator seeded with this value.
    pub repetition_seed_base: u64,
    pub synthesis: SynthesisSpec,
    pub dynamics: Dynamics,
    /// Lower edges of the age bins used by age-grouped indicators. Must start
    /// at 0 and increase strictly; the last bin is open-ended.
    pub age_bins: Vec<u32>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            start_year: 2000,
            steps: 10,
            repetition_seed_base: 0x5eed_0000,
            synthesis: SynthesisSpec::default(),
            dynamics: Dynamics::default(),
            age_bins: vec![0, 15, 25, 45, 65],
        }
    }
}

impl SimConfig {
    /// A small world suitable for tests and quick experiments.
    pub fn tiny(municipalities: usize, individuals_per_municipality: usize) -> Self {
        let mut cfg = Self::default();
        cfg.synthesis.municipalities = municipalities;
        cfg.synthesis.individuals_per_municipality = individuals_per_municipality;
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSimConfig(m));
        if self.steps < 1 {
            return bad("steps must be at least 1".into());
        }
        if self.age_bins.first() != Some(&0) || self.age_bins.windows(2).any(|w| w[0] >= w[1]) {
            return bad("age_bins must start at 0 and increase strictly".into());
        }
        self.synthesis.validate()?;
        self.dynamics.validate()
    }

    pub fn age_bin(&self, age: u32) -> u32 {
        (self.age_bins.partition_point(|&lo| lo <= age) - 1) as u32
    }

    /// Years covered by a run: `start_year + 1 ..= start_year + steps`.
    pub fn simulated_years(&self) -> std::ops::RangeInclusive<i32> {
        self.start_year + 1..=self.start_year + self.steps as i32
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgeBand {
    pub lower: u32,
    pub upper: u32,
    pub weight: f64,
}

/// How the synthetic initial population is built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthesisSpec {
    pub municipalities: usize,
    /// District of each municipality. Empty means a single district 0.
    pub district_map: Vec<u32>,
    pub individuals_per_municipality: usize,
    /// Number of job sectors.
    pub sectors: usize,
    /// Relative frequency of households with 1, 2, 3 and 4 members.
    pub household_size_weights: [f64; 4],
    /// Age distribution of household heads and partners.
    pub adult_age_bands: Vec<AgeBand>,
    /// Share of working-age non-students who start employed.
    pub employment_share: f64,
    /// Share of working-age non-students who start unemployed.
    pub unemployment_share: f64,
    /// Initial job slots per sector are `ceil(occupied * (1 + job_slack))`.
    pub job_slack: f64,
    /// Vacant dwellings per municipality as a share of its households.
    pub vacancy_share: f64,
}

impl Default for SynthesisSpec {
    fn default() -> Self {
        Self {
            municipalities: 1,
            district_map: Vec::new(),
            individuals_per_municipality: 500,
            sectors: 3,
            household_size_weights: [0.30, 0.34, 0.17, 0.19],
            adult_age_bands: vec![
                AgeBand { lower: 18, upper: 29, weight: 0.20 },
                AgeBand { lower: 30, upper: 44, weight: 0.28 },
                AgeBand { lower: 45, upper: 64, weight: 0.34 },
                AgeBand { lower: 65, upper: 90, weight: 0.18 },
            ],
            employment_share: 0.72,
            unemployment_share: 0.10,
            job_slack: 0.05,
            vacancy_share: 0.10,
        }
    }
}

impl SynthesisSpec {
    pub fn district_of(&self, municipality: usize) -> u32 {
        self.district_map.get(municipality).copied().unwrap_or(0)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidSimConfig(m.to_string()));
        if self.municipalities == 0 {
            return bad("at least one municipality is required");
        }
        if self.individuals_per_municipality == 0 {
            return bad("at least one individual per municipality is required");
        }
        if self.sectors == 0 {
            return bad("at least one job sector is required");
        }
        if !self.district_map.is_empty() && self.district_map.len() != self.municipalities {
            return bad("district_map needs one entry per municipality");
        }
        if self.household_size_weights.iter().any(|w| w.is_nan() || *w < 0.0)
            || self.household_size_weights.iter().sum::<f64>() <= 0.0
        {
            return bad("household_size_weights must be non-negative with a positive sum");
        }
        if self.adult_age_bands.is_empty()
            || self
                .adult_age_bands
                .iter()
                .any(|b| b.lower < 18 || b.lower > b.upper || b.weight.is_nan() || b.weight < 0.0)
            || self.adult_age_bands.iter().map(|b| b.weight).sum::<f64>() <= 0.0
        {
            return bad("adult_age_bands must be non-empty, start at 18 or later, and carry positive weight");
        }
        let shares = [self.employment_share, self.unemployment_share, self.job_slack, self.vacancy_share];
        if shares.iter().any(|s| !(0.0..=1.0).contains(s)) || self.employment_share + self.unemployment_share > 1.0 {
            return bad("shares must lie in [0, 1] and employment + unemployment must not exceed 1");
        }
        Ok(())
    }
}

/// Fixed model constants that are not calibrated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Dynamics {
    /// Test hook: `false` forces every death hazard to zero.
    pub mortality: bool,
    /// Piecewise-constant yearly death hazard; each band applies from its
    /// `from_age` up to the next band.
    pub death_hazard: Vec<HazardBand>,
    pub max_age: u32,
    pub school_age: u32,
    /// Students reaching this age either leave the region to study or enter
    /// the labor market.
    pub higher_education_age: u32,
    /// Youngest age at which an individual can form a couple or leave home.
    pub adult_age: u32,
    /// Oldest age at which an individual looks for a partner.
    pub max_partnering_age: u32,
    pub retirement_age: u32,
    /// Yearly probability that a worker loses their job.
    pub job_separation_rate: f64,
    /// Share of vacant job slots filled by commuters living outside the region.
    pub commuter_share: f64,
    pub max_rooms: u32,
    /// Vacant dwellings a dissatisfied household inspects per year.
    pub dwelling_search_draws: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HazardBand {
    pub from_age: u32,
    pub rate: f64,
}

impl Default for Dynamics {
    fn default() -> Self {
        let band = |from_age, rate| HazardBand { from_age, rate };
        Self {
            mortality: true,
            death_hazard: vec![
                band(0, 0.004),
                band(1, 0.0003),
                band(40, 0.002),
                band(60, 0.01),
                band(70, 0.03),
                band(80, 0.08),
                band(90, 0.2),
            ],
            max_age: 120,
            school_age: 6,
            higher_education_age: 18,
            adult_age: 18,
            max_partnering_age: 70,
            retirement_age: 65,
            job_separation_rate: 0.05,
            commuter_share: 0.5,
            max_rooms: 5,
            dwelling_search_draws: 3,
        }
    }
}

impl Dynamics {
    pub fn hazard(&self, age: u32) -> f64 {
        if !self.mortality {
            return 0.0;
        }
        if age >= self.max_age {
            return 1.0;
        }
        self.death_hazard.iter().rev().find(|b| b.from_age <= age).map_or(0.0, |b| b.rate)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidSimConfig(m.to_string()));
        if self.death_hazard.windows(2).any(|w| w[0].from_age >= w[1].from_age)
            || self.death_hazard.iter().any(|b| !(0.0..=1.0).contains(&b.rate))
        {
            return bad("death_hazard bands must be ordered by age with rates in [0, 1]");
        }
        if !(self.school_age < self.higher_education_age && self.higher_education_age < self.retirement_age) {
            return bad("expected school_age < higher_education_age < retirement_age");
        }
        if self.retirement_age >= self.max_age || self.adult_age > self.max_partnering_age {
            return bad("age thresholds are inconsistent");
        }
        if !(0.0..=1.0).contains(&self.job_separation_rate) || !(0.0..=1.0).contains(&self.commuter_share) {
            return bad("job_separation_rate and commuter_share must lie in [0, 1]");
        }
        if self.max_rooms < 1 {
            return bad("max_rooms must be at least 1");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        SimConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_degenerate_sizes() {
        assert!(SimConfig { steps: 0, ..SimConfig::default() }.validate().is_err());
        let mut cfg = SimConfig::default();
        cfg.synthesis.municipalities = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = SimConfig::default();
        cfg.synthesis.sectors = 0;
        assert!(cfg.validate().is_err());
        assert!(SimConfig { age_bins: vec![5, 10], ..SimConfig::default() }.validate().is_err());
    }

    #[test]
    fn age_bins_and_hazards() {
        let cfg = SimConfig::default();
        assert_eq!(cfg.age_bin(0), 0);
        assert_eq!(cfg.age_bin(14), 0);
        assert_eq!(cfg.age_bin(15), 1);
        assert_eq!(cfg.age_bin(99), 4);
        let d = Dynamics::default();
        assert_eq!(d.hazard(0), 0.004);
        assert_eq!(d.hazard(39), 0.0003);
        assert_eq!(d.hazard(95), 0.2);
        assert_eq!(d.hazard(120), 1.0);
        let off = Dynamics { mortality: false, ..Dynamics::default() };
        assert_eq!(off.hazard(120), 0.0);
    }

    #[test]
    fn partial_json_fills_defaults() {
        let cfg: SimConfig = serde_json::from_str(r#"{"steps": 3, "synthesis": {"municipalities": 2}}"#).unwrap();
        assert_eq!(cfg.steps, 3);
        assert_eq!(cfg.synthesis.municipalities, 2);
        assert_eq!(cfg.synthesis.individuals_per_municipality, 500);
        assert!(serde_json::from_str::<SimConfig>(r#"{"stepz": 3}"#).is_err());
    }
}
