//! Ordinary least squares by QR decomposition of the design matrix.

use nalgebra::{DMatrix, DVector};

use super::dist::student_t_two_sided;
use crate::error::{Error, Result};

/// A column whose diagonal entry of R falls below this fraction of its
/// original norm is treated as a linear combination of earlier columns.
const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTerm {
    pub name: String,
    pub coefficient: f64,
    pub standard_error: f64,
    pub t_stat: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionReport {
    /// Intercept first, then one term per regressor.
    pub terms: Vec<RegressionTerm>,
    pub r_squared: f64,
    pub observations: usize,
    pub residual_df: usize,
    pub residuals: Vec<f64>,
}

impl RegressionReport {
    pub fn intercept(&self) -> &RegressionTerm {
        &self.terms[0]
    }

    pub fn term(&self, name: &str) -> Option<&RegressionTerm> {
        self.terms.iter().find(|t| t.name == name)
    }
}

/// Fits `y = b0 + sum_j b_j x_j` by least squares. `columns[j]` holds the
/// observations of regressor `names[j]`. Standard errors come from the
/// residual variance times the diagonal of `(X'X)^-1`, and p-values from a
/// two-sided Student-t test with `n - p - 1` degrees of freedom.
pub fn ols_columns(names: &[String], columns: &[Vec<f64>], y: &[f64]) -> Result<RegressionReport> {
    assert_eq!(names.len(), columns.len(), "one name per regressor column");
    let n = y.len();
    let k = columns.len() + 1;
    if n <= k {
        return Err(Error::TooFewRows { rows: n, needed: k });
    }
    for c in columns {
        if c.len() != n {
            return Err(Error::LengthMismatch { left: c.len(), right: n });
        }
    }
    let term_name = |j: usize| if j == 0 { "intercept".to_string() } else { names[j - 1].clone() };

    let x = DMatrix::from_fn(n, k, |i, j| if j == 0 { 1.0 } else { columns[j - 1][i] });
    let qr = x.clone().qr();
    let r = qr.r();
    let collinear: Vec<String> = (0..k)
        .filter(|&j| {
            let norm = x.column(j).norm();
            norm == 0.0 || r[(j, j)].abs() <= RANK_TOLERANCE * norm
        })
        .map(term_name)
        .collect();
    if !collinear.is_empty() {
        return Err(Error::RankDeficient(collinear));
    }

    let mut qty = DVector::from_column_slice(y);
    qr.q_tr_mul(&mut qty);
    let beta = r.solve_upper_triangular(&qty.rows(0, k).into_owned()).expect("full rank checked");
    let rinv = r.solve_upper_triangular(&DMatrix::identity(k, k)).expect("full rank checked");

    let residuals: Vec<f64> = (0..n)
        .map(|i| y[i] - beta[0] - columns.iter().zip(beta.iter().skip(1)).map(|(c, b)| c[i] * b).sum::<f64>())
        .collect();
    let ssr: f64 = residuals.iter().map(|e| e * e).sum();
    let mean_y = y.iter().sum::<f64>() / n as f64;
    let sst: f64 = y.iter().map(|v| (v - mean_y) * (v - mean_y)).sum();
    let r_squared = if sst > 0.0 {
        1.0 - ssr / sst
    } else if ssr == 0.0 {
        1.0
    } else {
        0.0
    };

    let df = n - k;
    let sigma2 = ssr / df as f64;
    let terms = (0..k)
        .map(|j| {
            // diag((X'X)^-1) = squared row norms of R^-1.
            let var = rinv.row(j).norm_squared();
            let standard_error = (sigma2 * var).sqrt();
            let t_stat = beta[j] / standard_error;
            RegressionTerm {
                name: term_name(j),
                coefficient: beta[j],
                standard_error,
                t_stat,
                p_value: student_t_two_sided(t_stat, df as f64),
            }
        })
        .collect();
    Ok(RegressionReport { terms, r_squared, observations: n, residual_df: df, residuals })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(k: usize) -> Vec<String> {
        (0..k).map(|i| format!("x{i}")).collect()
    }

    #[test]
    fn identity_line() {
        let fit = ols_columns(&names(1), &[vec![1.0, 2.0, 3.0]], &[1.0, 2.0, 3.0]).unwrap();
        assert!((fit.terms[1].coefficient - 1.0).abs() < 1e-12);
        assert!(fit.intercept().coefficient.abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_simple_regression() {
        let x = [1.0, 2.0, 4.0, 5.0, 8.0];
        let y = [3.1, 4.9, 9.2, 10.8, 17.5];
        let n = x.len() as f64;
        let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
        let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
        let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let ssr: f64 = x.iter().zip(&y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
        let s2 = ssr / (n - 2.0);
        let se_slope = (s2 / sxx).sqrt();
        let se_intercept = (s2 * (1.0 / n + mx * mx / sxx)).sqrt();

        let fit = ols_columns(&names(1), &[x.to_vec()], &y).unwrap();
        assert!((fit.terms[1].coefficient - slope).abs() < 1e-12);
        assert!((fit.intercept().coefficient - intercept).abs() < 1e-12);
        assert!((fit.terms[1].standard_error - se_slope).abs() < 1e-12);
        assert!((fit.intercept().standard_error - se_intercept).abs() < 1e-12);
        assert_eq!(fit.residual_df, 3);
        for t in &fit.terms {
            assert!((t.t_stat - t.coefficient / t.standard_error).abs() < 1e-9);
            assert!((0.0..=1.0).contains(&t.p_value));
        }
    }

    #[test]
    fn rank_deficiency_names_columns() {
        let a = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        let doubled: Vec<f64> = a.iter().map(|v| 2.0 * v).collect();
        let constant = vec![3.0; 5];
        let y = [1.0, 3.0, 2.0, 5.0, 4.0];
        let err = ols_columns(&names(3), &[a, doubled, constant], &y).unwrap_err();
        match err {
            Error::RankDeficient(cols) => assert_eq!(cols, vec!["x1".to_string(), "x2".to_string()]),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn too_few_rows() {
        assert!(matches!(
            ols_columns(&names(2), &[vec![1.0, 2.0, 3.0], vec![0.0, 1.0, 0.0]], &[1.0, 2.0, 3.0]),
            Err(Error::TooFewRows { rows: 3, needed: 3 })
        ));
    }

    #[test]
    fn residuals_orthogonal_to_regressors() {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(12);
        use rand::Rng;
        let n = 200;
        let cols: Vec<Vec<f64>> =
            (0..4).map(|j| (0..n).map(|_| rng.random::<f64>() * (j + 1) as f64 * 10.0).collect()).collect();
        let y: Vec<f64> = (0..n).map(|i| 1.0 + cols[0][i] - 3.0 * cols[2][i] + rng.random::<f64>() * 5.0).collect();
        let fit = ols_columns(&names(4), &cols, &y).unwrap();
        let scale = y.iter().map(|v| v.abs()).sum::<f64>();
        assert!(fit.residuals.iter().sum::<f64>().abs() < 1e-8 * scale);
        for c in &cols {
            let dot: f64 = c.iter().zip(&fit.residuals).map(|(a, b)| a * b).sum();
            let col_scale = c.iter().map(|v| v.abs()).sum::<f64>();
            assert!(dot.abs() < 1e-8 * scale * col_scale, "{dot}");
        }
        assert!(fit.r_squared > 0.0 && fit.r_squared < 1.0);
    }
}
