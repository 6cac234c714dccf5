//! Calibration parameter space and the chromosome that encodes one point in it.
//!
//! The space is an ordered list of bounded parameters. Index `i` of a
//! [`Chromosome`] always refers to `space.params()[i]`. Integer-kind
//! parameters are stored as whole-valued `f64` so that crossover and mutation
//! can treat every gene the same way; [`ParameterSpace::clamp_and_round`]
//! restores the lattice constraint afterwards.

use std::collections::HashSet;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const AGE_MIN_HAVING_CHILD: usize = 0;
pub const AGE_MAX_HAVING_CHILD: usize = 1;
pub const NB_CHILD: usize = 2;
pub const PROBABILITY_TO_MAKE_COUPLE: usize = 3;
pub const NB_JOIN_TRIALS: usize = 4;
pub const SPLITTING_PROBA: usize = 5;
pub const PROB_TO_ACCEPT_NEW_RESIDENCE: usize = 6;
pub const RES_SATISFACT_MARGIN: usize = 7;
pub const PROB_STUDY_OUTSIDE: usize = 8;
pub const PROB_LOOKING_REGIONAL_JOBS: usize = 9;
pub const JOB_VACANCY_RATE: usize = 10;

/// Number of genes in the canonical space.
pub const GENES: usize = 11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamKind {
    Integer,
    Real,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterDef {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub kind: ParamKind,
}

impl ParameterDef {
    pub fn new(name: &str, lower: f64, upper: f64, kind: ParamKind) -> Self {
        Self { name: name.to_string(), lower, upper, kind }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    /// Range midpoint, snapped to the lattice for integer parameters.
    pub fn midpoint(&self) -> f64 {
        self.repair(0.5 * (self.lower + self.upper))
    }

    fn repair(&self, v: f64) -> f64 {
        let v = if v.is_nan() { self.lower } else { v };
        let v = match self.kind {
            ParamKind::Integer => v.round(),
            ParamKind::Real => v,
        };
        // `+ 0.0` folds -0.0 into 0.0 so cache keys stay canonical.
        v.clamp(self.lower, self.upper) + 0.0
    }

    fn check(&self) -> Result<()> {
        if !(self.lower.is_finite() && self.upper.is_finite()) {
            return Err(Error::InvalidSpace(format!("{}: bounds must be finite", self.name)));
        }
        if self.lower >= self.upper {
            return Err(Error::InvalidSpace(format!(
                "{}: lower bound {} is not below upper bound {}",
                self.name, self.lower, self.upper
            )));
        }
        if self.kind == ParamKind::Integer && (self.lower.fract() != 0.0 || self.upper.fract() != 0.0) {
            return Err(Error::InvalidSpace(format!("{}: integer parameter needs whole-number bounds", self.name)));
        }
        Ok(())
    }
}

/// What is wrong with one gene.
#[derive(Debug, Clone, PartialEq)]
pub enum Problem {
    BelowLower(f64),
    AboveUpper(f64),
    NonInteger(f64),
    NotFinite,
    /// The chromosome has the wrong number of genes; `name` is empty.
    Length {
        expected: usize,
        found: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub name: String,
    pub problem: Problem,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.problem {
            Problem::BelowLower(b) => write!(f, "{} below lower bound {}", self.name, b),
            Problem::AboveUpper(b) => write!(f, "{} above upper bound {}", self.name, b),
            Problem::NonInteger(v) => write!(f, "{} must be an integer, got {}", self.name, v),
            Problem::NotFinite => write!(f, "{} is not finite", self.name),
            Problem::Length { expected, found } => {
                write!(f, "expected {expected} genes, found {found}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ParameterDef>", into = "Vec<ParameterDef>")]
pub struct ParameterSpace {
    params: Vec<ParameterDef>,
}

impl TryFrom<Vec<ParameterDef>> for ParameterSpace {
    type Error = Error;

    fn try_from(params: Vec<ParameterDef>) -> Result<Self> {
        Self::new(params)
    }
}

impl From<ParameterSpace> for Vec<ParameterDef> {
    fn from(space: ParameterSpace) -> Self {
        space.params
    }
}

impl ParameterSpace {
    pub fn new(params: Vec<ParameterDef>) -> Result<Self> {
        if params.is_empty() {
            return Err(Error::InvalidSpace("no parameters".into()));
        }
        let mut seen = HashSet::new();
        for p in &params {
            p.check()?;
            if !seen.insert(p.name.as_str()) {
                return Err(Error::InvalidSpace(format!("duplicate parameter name {}", p.name)));
            }
        }
        Ok(Self { params })
    }

    /// The eleven calibration parameters in canonical order.
    pub fn default_space() -> Self {
        use ParamKind::{Integer, Real};
        let params = vec![
            ParameterDef::new("ageMinHavingChild", 15.0, 20.0, Integer),
            ParameterDef::new("ageMaxHavingChild", 40.0, 50.0, Integer),
            ParameterDef::new("nbChild", 1.0, 6.0, Integer),
            ParameterDef::new("probabilityToMakeCouple", 0.0, 0.05, Real),
            ParameterDef::new("nbJoinTrials", 1.0, 50.0, Integer),
            ParameterDef::new("splittingProba", 0.0, 1.0, Real),
            ParameterDef::new("probToAcceptNewResidence", 0.0, 1.0, Real),
            ParameterDef::new("resSatisfactMargin", 0.0, 3.0, Integer),
            ParameterDef::new("probStudyOutside", 0.0, 1.0, Real),
            ParameterDef::new("probLookingRegionalJobs", 0.0, 1.0, Real),
            ParameterDef::new("jobVacancyRate", 0.0, 1.0, Real),
        ];
        Self { params }
    }

    /// Replaces the bounds of existing parameters by name. Order never changes.
    pub fn with_overrides(&self, overrides: &[ParameterDef]) -> Result<Self> {
        let mut params = self.params.clone();
        for o in overrides {
            let slot = params
                .iter_mut()
                .find(|p| p.name == o.name)
                .ok_or_else(|| Error::InvalidSpace(format!("unknown parameter {}", o.name)))?;
            *slot = o.clone();
        }
        Self::new(params)
    }

    pub fn params(&self) -> &[ParameterDef] {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.params.iter().position(|p| p.name == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.params.iter().map(|p| p.name.as_str())
    }

    /// Draws every gene uniformly from its range; integer genes uniformly over
    /// the integer lattice of the range.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Chromosome {
        let values = self
            .params
            .iter()
            .map(|p| match p.kind {
                ParamKind::Integer => rng.random_range(p.lower as i64..=p.upper as i64) as f64,
                ParamKind::Real => p.lower + p.width() * rng.random::<f64>(),
            })
            .collect();
        Chromosome(values)
    }

    /// Reports every out-of-range or non-integer gene by name.
    pub fn validate(&self, c: &Chromosome) -> std::result::Result<(), Vec<Violation>> {
        if c.len() != self.len() {
            return Err(vec![Violation {
                name: String::new(),
                problem: Problem::Length { expected: self.len(), found: c.len() },
            }]);
        }
        let mut violations = Vec::new();
        for (p, &v) in self.params.iter().zip(c.values()) {
            let problem = if !v.is_finite() {
                Some(Problem::NotFinite)
            } else if v < p.lower {
                Some(Problem::BelowLower(p.lower))
            } else if v > p.upper {
                Some(Problem::AboveUpper(p.upper))
            } else if p.kind == ParamKind::Integer && v.fract() != 0.0 {
                Some(Problem::NonInteger(v))
            } else {
                None
            };
            if let Some(problem) = problem {
                violations.push(Violation { name: p.name.clone(), problem });
            }
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(violations)
        }
    }

    pub fn ensure_valid(&self, c: &Chromosome) -> Result<()> {
        self.validate(c).map_err(Error::InvalidChromosome)
    }

    /// Clips each gene to its range, rounding integer genes to the nearest
    /// whole number first. The result always passes [`validate`](Self::validate).
    ///
    /// Panics if the chromosome length differs from the space.
    pub fn clamp_and_round(&self, c: &Chromosome) -> Chromosome {
        assert_eq!(c.len(), self.len(), "chromosome length does not match parameter space");
        Chromosome(self.params.iter().zip(c.values()).map(|(p, &v)| p.repair(v)).collect())
    }

    /// Range midpoints, lattice-snapped for integer parameters.
    pub fn midpoints(&self) -> Chromosome {
        Chromosome(self.params.iter().map(ParameterDef::midpoint).collect())
    }
}

/// One assignment of values to every parameter, aligned with the space order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chromosome(Vec<f64>);

impl Chromosome {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Exact bit pattern of every gene; used as the memoization key.
    pub fn key(&self) -> ChromosomeKey {
        ChromosomeKey(self.0.iter().map(|v| v.to_bits()).collect())
    }
}

impl From<Vec<f64>> for Chromosome {
    fn from(values: Vec<f64>) -> Self {
        Self(values)
    }
}

impl std::ops::Index<usize> for Chromosome {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ChromosomeKey(Vec<u64>);
