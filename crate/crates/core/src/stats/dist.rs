//! Student-t tail probabilities through the regularized incomplete beta function.

pub use statrs::function::gamma::ln_gamma;

/// Regularized incomplete beta `I_x(a, b)` for `a, b > 0`, clamped to 0 and 1
/// outside the open unit interval.
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        statrs::function::beta::beta_reg(a, b, x)
    }
}

/// Two-sided tail probability `P(|T| >= |t|)` of a Student-t variable with
/// `df` degrees of freedom, i.e. `I_{df/(df+t^2)}(df/2, 1/2)`.
pub fn student_t_two_sided(t: f64, df: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if t.is_infinite() {
        return 0.0;
    }
    regularized_incomplete_beta(df / (df + t * t), 0.5 * df, 0.5).clamp(0.0, 1.0)
}

/// Cumulative distribution function of the Student-t distribution.
pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    let tail = 0.5 * student_t_two_sided(t, df);
    if t >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}
