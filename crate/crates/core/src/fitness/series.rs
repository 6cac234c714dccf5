//! Indicator series keyed by (indicator, sub-key, geography, year), and the
//! CSV format shared by observed data and simulation dumps:
//!
//! ```text
//! indicator,subkey,geo_level,geo_id,year,value
//! household_structure,3,district,0,2004,27.5
//! ```
//!
//! `subkey` is the age-bin index for age-grouped indicators, the sector index
//! for `sector_of_activity`, the size class (0 = 1 person .. 3 = 4+) for
//! `household_structure`, 0 = births / 1 = deaths for `births_deaths`, and 0
//! otherwise.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 6] = ["indicator", "subkey", "geo_level", "geo_id", "year", "value"];

pub const BIRTHS: u32 = 0;
pub const DEATHS: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Indicator {
    AgeStructure,
    BirthsDeaths,
    OutMigration,
    HouseholdStructure,
    Employment,
    Unemployment,
    SectorOfActivity,
    Workplace,
}

impl Indicator {
    pub const ALL: [Indicator; 8] = [
        Indicator::AgeStructure,
        Indicator::BirthsDeaths,
        Indicator::OutMigration,
        Indicator::HouseholdStructure,
        Indicator::Employment,
        Indicator::Unemployment,
        Indicator::SectorOfActivity,
        Indicator::Workplace,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Indicator::AgeStructure => "age_structure",
            Indicator::BirthsDeaths => "births_deaths",
            Indicator::OutMigration => "out_migration",
            Indicator::HouseholdStructure => "household_structure",
            Indicator::Employment => "employment",
            Indicator::Unemployment => "unemployment",
            Indicator::SectorOfActivity => "sector_of_activity",
            Indicator::Workplace => "workplace",
        }
    }

    /// Geography at which the indicator is compared.
    pub fn geo_level(self) -> GeoLevel {
        match self {
            Indicator::HouseholdStructure | Indicator::SectorOfActivity => GeoLevel::District,
            _ => GeoLevel::Municipality,
        }
    }

    /// District-level indicators are percentages; the rest are counts.
    pub fn is_percentage(self) -> bool {
        self.geo_level() == GeoLevel::District
    }

    pub fn accepted_names() -> String {
        Self::ALL.iter().map(|i| i.name()).collect::<Vec<_>>().join(", ")
    }
}

impl fmt::Display for Indicator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Indicator {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|i| i.name() == s)
            .ok_or_else(|| format!("unknown indicator '{s}'; accepted names: {}", Self::accepted_names()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GeoLevel {
    Municipality,
    District,
}

impl GeoLevel {
    pub fn name(self) -> &'static str {
        match self {
            GeoLevel::Municipality => "municipality",
            GeoLevel::District => "district",
        }
    }
}

impl FromStr for GeoLevel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "municipality" => Ok(GeoLevel::Municipality),
            "district" => Ok(GeoLevel::District),
            _ => Err(format!("unknown geo_level '{s}'; accepted: municipality, district")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IndicatorKey {
    pub indicator: Indicator,
    pub subkey: u32,
    pub geo_level: GeoLevel,
    pub geo_id: u32,
    pub year: i32,
}

impl IndicatorKey {
    /// Key with the geography level implied by the indicator.
    pub fn new(indicator: Indicator, subkey: u32, geo_id: u32, year: i32) -> Self {
        Self { indicator, subkey, geo_level: indicator.geo_level(), geo_id, year }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IndicatorSeries {
    entries: BTreeMap<IndicatorKey, f64>,
}

#[derive(Serialize, Deserialize)]
struct Row {
    indicator: String,
    subkey: u32,
    geo_level: String,
    geo_id: u32,
    year: i32,
    value: f64,
}

impl IndicatorSeries {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, key: IndicatorKey, value: f64) {
        self.entries.insert(key, value);
    }

    pub fn get(&self, key: &IndicatorKey) -> Option<f64> {
        self.entries.get(key).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&IndicatorKey, &f64)> {
        self.entries.iter()
    }

    pub fn extend(&mut self, other: IndicatorSeries) {
        self.entries.extend(other.entries);
    }

    pub fn years(&self) -> Vec<i32> {
        let mut years: Vec<i32> = self.entries.keys().map(|k| k.year).collect();
        years.sort_unstable();
        years.dedup();
        years
    }

    /// Keeps only entries whose key satisfies `keep`.
    pub fn filtered(&self, mut keep: impl FnMut(&IndicatorKey) -> bool) -> Self {
        Self { entries: self.entries.iter().filter(|(k, _)| keep(k)).map(|(k, v)| (*k, *v)).collect() }
    }

    /// Entrywise arithmetic mean. A key missing from some runs is averaged over
    /// the runs that contain it. Summation follows the slice order so the
    /// result is independent of how the runs were scheduled.
    pub fn mean(runs: &[IndicatorSeries]) -> IndicatorSeries {
        let mut acc: BTreeMap<IndicatorKey, (f64, u32)> = BTreeMap::new();
        for run in runs {
            for (k, v) in &run.entries {
                let slot = acc.entry(*k).or_insert((0.0, 0));
                slot.0 += v;
                slot.1 += 1;
            }
        }
        IndicatorSeries { entries: acc.into_iter().map(|(k, (sum, n))| (k, sum / f64::from(n))).collect() }
    }

    /// Checks value domains: finite, counts non-negative, percentages in [0, 100].
    pub fn check_values(&self) -> std::result::Result<(), String> {
        for (k, &v) in &self.entries {
            if !v.is_finite() || v < 0.0 || (k.indicator.is_percentage() && v > 100.0) {
                return Err(format!(
                    "{} {} {} {} {}: value {} out of domain",
                    k.indicator,
                    k.subkey,
                    k.geo_level.name(),
                    k.geo_id,
                    k.year,
                    v
                ));
            }
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for (k, &value) in &self.entries {
            out.serialize(Row {
                indicator: k.indicator.name().to_string(),
                subkey: k.subkey,
                geo_level: k.geo_level.name().to_string(),
                geo_id: k.geo_id,
                year: k.year,
                value,
            })?;
        }
        if self.entries.is_empty() {
            out.write_record(CSV_HEADER)?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    /// Parses the CSV format, naming `origin` in error messages. The header
    /// must match exactly; unknown indicator names and level/indicator
    /// mismatches are rejected.
    pub fn read_csv<R: Read>(r: R, origin: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let header = rdr.headers()?.clone();
        if header.iter().ne(CSV_HEADER) {
            return Err(Error::parse(
                origin,
                format!(
                    "expected header '{}', found '{}'",
                    CSV_HEADER.join(","),
                    header.iter().collect::<Vec<_>>().join(",")
                ),
            ));
        }
        let mut series = IndicatorSeries::new();
        for (i, row) in rdr.deserialize::<Row>().enumerate() {
            let line = i + 2;
            let row = row.map_err(|e| Error::parse(origin, format!("line {line}: {e}")))?;
            let indicator: Indicator =
                row.indicator.parse().map_err(|e| Error::parse(origin, format!("line {line}: {e}")))?;
            let geo_level: GeoLevel =
                row.geo_level.parse().map_err(|e| Error::parse(origin, format!("line {line}: {e}")))?;
            if geo_level != indicator.geo_level() {
                return Err(Error::parse(
                    origin,
                    format!(
                        "line {line}: {} is compared at {} level, not {}",
                        indicator,
                        indicator.geo_level().name(),
                        geo_level.name()
                    ),
                ));
            }
            let key = IndicatorKey { indicator, subkey: row.subkey, geo_level, geo_id: row.geo_id, year: row.year };
            if series.entries.insert(key, row.value).is_some() {
                return Err(Error::parse(origin, format!("line {line}: duplicate key")));
            }
        }
        series.check_values().map_err(|e| Error::parse(origin, e))?;
        Ok(series)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(std::io::BufReader::new(file), path)
    }
}

impl FromIterator<(IndicatorKey, f64)> for IndicatorSeries {
    fn from_iter<T: IntoIterator<Item = (IndicatorKey, f64)>>(iter: T) -> Self {
        Self { entries: iter.into_iter().collect() }
    }
}
