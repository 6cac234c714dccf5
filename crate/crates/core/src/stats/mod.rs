//! Sensitivity analysis: uniform sampling of the parameter space, Pearson
//! correlation of each parameter with the fitness, and a linear-regression
//! meta-model of fitness on all parameters.

pub mod dist;
mod ols;
mod report;
mod sampling;

pub use ols::{ols_columns, RegressionReport, RegressionTerm};
pub use report::{load_analysis_csv, read_analysis_csv, Analysis, AnalysisRow, ANALYSIS_HEADER};
pub use sampling::{run_sampling, SampleMatrix, FITNESS_COLUMN};

use crate::error::{Error, Result};

/// Sample Pearson product-moment correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { left: x.len(), right: y.len() });
    }
    if x.len() < 2 {
        return Err(Error::InvalidArgument("correlation needs at least 2 observations".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::ConstantVector("x"));
    }
    if syy == 0.0 {
        return Err(Error::ConstantVector("y"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub pearson_r: f64,
    pub r_squared: f64,
}

/// Correlation of each parameter with fitness, in space order. `None` marks a
/// parameter (or fitness) column that is constant.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationReport {
    pub entries: Vec<(String, Option<Correlation>)>,
}

impl CorrelationReport {
    /// Parameter with the largest `|r|`.
    pub fn strongest(&self) -> Option<(&str, Correlation)> {
        self.entries
            .iter()
            .filter_map(|(n, c)| c.map(|c| (n.as_str(), c)))
            .max_by(|a, b| a.1.pearson_r.abs().total_cmp(&b.1.pearson_r.abs()))
    }

    pub fn get(&self, name: &str) -> Option<Correlation> {
        self.entries.iter().find(|(n, _)| n == name).and_then(|(_, c)| *c)
    }
}

pub fn correlation_report(m: &SampleMatrix) -> Result<CorrelationReport> {
    if m.len() < 2 {
        return Err(Error::InvalidArgument(format!("analysis needs at least 2 samples, got {}", m.len())));
    }
    let y = m.fitness();
    let entries = m
        .space()
        .names()
        .enumerate()
        .map(|(i, name)| {
            let c = pearson(&m.column(i), &y).ok().map(|r| Correlation { pearson_r: r, r_squared: r * r });
            (name.to_string(), c)
        })
        .collect();
    Ok(CorrelationReport { entries })
}

/// Linear-regression meta-model of fitness on every parameter column.
pub fn ols_fit(m: &SampleMatrix) -> Result<RegressionReport> {
    let names: Vec<String> = m.space().names().map(str::to_string).collect();
    let columns: Vec<Vec<f64>> = (0..m.space().len()).map(|i| m.column(i)).collect();
    ols_columns(&names, &columns, &m.fitness())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::param_space::{Chromosome, ParameterSpace, GENES};
    use proptest::prelude::*;

    #[test]
    fn hand_computed_cases() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap() - 1.0).abs() < 1e-15);
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| -2.0 * v + 5.0).collect();
        assert!((pearson(&x, &y).unwrap() + 1.0).abs() < 1e-15);
        // Means 2.5 and 3.75: Sxy = 3.5, Sxx = 5, Syy = 4.75.
        let r = pearson(&x, &[2.0, 4.0, 5.0, 4.0]).unwrap();
        assert!((r - 3.5 / (5.0f64 * 4.75).sqrt()).abs() < 1e-12);
        assert!((r - 0.718_184_846_459_607_9).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        assert!(matches!(pearson(&[1.0, 1.0], &[1.0, 2.0]), Err(Error::ConstantVector("x"))));
        assert!(matches!(pearson(&[1.0, 2.0], &[3.0, 3.0]), Err(Error::ConstantVector("y"))));
        assert!(pearson(&[1.0], &[1.0]).is_err());
        assert!(pearson(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn fitness_equal_to_one_parameter() {
        let space = ParameterSpace::default_space();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(3);
        let rows: Vec<(Chromosome, f64)> = (0..400)
            .map(|_| {
                let c = space.sample_uniform(&mut rng);
                let f = c[crate::param_space::SPLITTING_PROBA];
                (c, f)
            })
            .collect();
        let report = correlation_report(&SampleMatrix::new(space, rows).unwrap()).unwrap();
        assert_eq!(report.strongest().unwrap().0, "splittingProba");
        assert!((report.get("splittingProba").unwrap().pearson_r - 1.0).abs() < 1e-12);
        for (name, c) in &report.entries {
            let c = c.unwrap();
            assert!((c.r_squared - c.pearson_r * c.pearson_r).abs() < 1e-12);
            if name != "splittingProba" {
                assert!(c.pearson_r.abs() < 0.2, "{name}: {}", c.pearson_r);
            }
        }
    }

    #[test]
    fn identical_rows_are_undefined() {
        let space = ParameterSpace::default_space();
        let c = space.midpoints();
        let m = SampleMatrix::new(space, vec![(c.clone(), 1.0), (c, 1.0)]).unwrap();
        let report = correlation_report(&m).unwrap();
        assert_eq!(report.entries.len(), GENES);
        assert!(report.entries.iter().all(|(_, c)| c.is_none()));
    }

    proptest! {
        #[test]
        fn affine_and_symmetric(
            x in proptest::collection::vec(-1e3f64..1e3, 3..40),
            noise in proptest::collection::vec(-1e3f64..1e3, 40),
            a in prop_oneof![0.1f64..10.0, -10.0f64..-0.1],
            b in -100.0f64..100.0,
        ) {
            prop_assume!(x.iter().any(|v| (v - x[0]).abs() > 1e-3));
            let y: Vec<f64> = x.iter().map(|v| a * v + b).collect();
            prop_assert!((pearson(&x, &y).unwrap() - a.signum()).abs() < 1e-9);
            let z = &noise[..x.len()];
            prop_assume!(z.iter().any(|v| (v - z[0]).abs() > 1e-3));
            prop_assert!((pearson(&x, z).unwrap() - pearson(z, &x).unwrap()).abs() < 1e-15);
        }
    }
}
