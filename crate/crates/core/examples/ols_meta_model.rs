//! Pearson correlation and least-squares regression on plain columns.

use microcal::stats::dist::student_t_two_sided;
use microcal::stats::{ols_columns, pearson};

fn main() -> microcal::Result<()> {
    let x1 = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
    let x2 = vec![0.3, -0.1, 0.8, 0.2, -0.5, 0.9, 0.1, -0.2];
    let y: Vec<f64> =
        x1.iter().zip(&x2).enumerate().map(|(i, (a, b))| 1.5 + 0.8 * a - 2.0 * b + 0.05 * (i % 3) as f64).collect();

    println!("pearson(x1, y) = {:.4}", pearson(&x1, &y)?);
    println!("pearson(x2, y) = {:.4}", pearson(&x2, &y)?);

    let fit = ols_columns(&["x1".into(), "x2".into()], &[x1, x2], &y)?;
    println!("R^2 = {:.6}, residual df = {}", fit.r_squared, fit.residual_df);
    for t in &fit.terms {
        println!(
            "{:<10} coef {:>9.4}  se {:>8.4}  t {:>9.3}  p {:.3e}",
            t.name, t.coefficient, t.standard_error, t.t_stat, t.p_value
        );
    }
    println!("two-sided p for t = 2.0 at 30 df: {:.5}", student_t_two_sided(2.0, 30.0));
    Ok(())
}
