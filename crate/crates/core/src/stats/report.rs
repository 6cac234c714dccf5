use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use super::{correlation_report, ols_fit, CorrelationReport, RegressionReport, SampleMatrix};
use crate::error::{Error, Result};

pub const ANALYSIS_HEADER: [&str; 7] =
    ["term", "pearson_r", "r_squared", "coefficient", "std_error", "t_stat", "p_value"];

/// One line of `analysis.csv`. Correlation cells are empty for the intercept
/// and for constant columns.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisRow {
    pub term: String,
    pub pearson_r: Option<f64>,
    pub r_squared: Option<f64>,
    pub coefficient: f64,
    pub std_error: f64,
    pub t_stat: f64,
    pub p_value: f64,
}

/// Correlation table plus regression meta-model over one sample matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub correlations: CorrelationReport,
    pub regression: RegressionReport,
}

impl Analysis {
    pub fn compute(m: &SampleMatrix) -> Result<Self> {
        Ok(Self { correlations: correlation_report(m)?, regression: ols_fit(m)? })
    }

    /// Intercept first, then parameters in space order.
    pub fn rows(&self) -> Vec<AnalysisRow> {
        self.regression
            .terms
            .iter()
            .map(|t| {
                let c = self.correlations.get(&t.name);
                AnalysisRow {
                    term: t.name.clone(),
                    pearson_r: c.map(|c| c.pearson_r),
                    r_squared: c.map(|c| c.r_squared),
                    coefficient: t.coefficient,
                    std_error: t.standard_error,
                    t_stat: t.t_stat,
                    p_value: t.p_value,
                }
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(ANALYSIS_HEADER)?;
        let cell = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        for r in self.rows() {
            out.write_record([
                r.term,
                cell(r.pearson_r),
                cell(r.r_squared),
                r.coefficient.to_string(),
                r.std_error.to_string(),
                r.t_stat.to_string(),
                r.p_value.to_string(),
            ])?;
        }
        out.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(BufWriter::new(file))
    }

    /// Fixed-width text with a correlation table and a regression table.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let na = |v: Option<f64>| v.map(|v| format!("{v:>10.3}")).unwrap_or_else(|| format!("{:>10}", "n/a"));
        let _ = writeln!(s, "Correlation between input parameters and fitness (n = {})", self.regression.observations);
        let _ = writeln!(s, "{:<28}{:>10}{:>10}", "parameter", "pearson r", "r^2");
        for (name, c) in &self.correlations.entries {
            let _ = writeln!(s, "{name:<28}{}{}", na(c.map(|c| c.pearson_r)), na(c.map(|c| c.r_squared)));
        }
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "Linear regression (R^2 = {:.3}, residual df = {})",
            self.regression.r_squared, self.regression.residual_df
        );
        let _ = writeln!(s, "{:<28}{:>14}{:>14}{:>10}{:>12}", "term", "coefficient", "std error", "t stat", "p-value");
        for t in &self.regression.terms {
            let _ = writeln!(
                s,
                "{:<28}{:>14.4}{:>14.4}{:>10.3}{:>12.3e}",
                t.name, t.coefficient, t.standard_error, t.t_stat, t.p_value
            );
        }
        s
    }

    pub fn save_text(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

/// Parses `analysis.csv` back into rows.
pub fn read_analysis_csv<R: Read>(r: R, origin: &Path) -> Result<Vec<AnalysisRow>> {
    let mut reader = csv::Reader::from_reader(r);
    if reader.headers()?.iter().ne(ANALYSIS_HEADER) {
        return Err(Error::parse(origin, format!("header must be `{}`", ANALYSIS_HEADER.join(","))));
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let line = i + 2;
        let num = |j: usize| -> Result<Option<f64>> {
            let cell = record.get(j).unwrap_or("").trim();
            if cell.is_empty() {
                return Ok(None);
            }
            cell.parse()
                .map(Some)
                .map_err(|e| Error::parse(origin, format!("row {line}, column {}: {e}", ANALYSIS_HEADER[j])))
        };
        let required = |j: usize| -> Result<f64> {
            num(j)?.ok_or_else(|| Error::parse(origin, format!("row {line}: empty {}", ANALYSIS_HEADER[j])))
        };
        rows.push(AnalysisRow {
            term: record.get(0).unwrap_or("").to_string(),
            pearson_r: num(1)?,
            r_squared: num(2)?,
            coefficient: required(3)?,
            std_error: required(4)?,
            t_stat: required(5)?,
            p_value: required(6)?,
        });
    }
    Ok(rows)
}

pub fn load_analysis_csv(path: &Path) -> Result<Vec<AnalysisRow>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_analysis_csv(file, path)
}
