//! Scalar special functions shared by the evaluators.

use std::f64::consts::SQRT_2;

/// Gaussian tail probability `Q(x) = P(Z > x)` for a standard normal `Z`.
///
/// Evaluated through `erfc`, which keeps full relative precision deep
/// into the upper tail.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

/// `ln Q(x)`, finite for every finite `x` where `Q(x)` itself underflows.
pub fn ln_q_function(x: f64) -> f64 {
    let q = q_function(x);
    if q > 1e-300 {
        return q.ln();
    }
    // Asymptotic series: Q(x) ~ phi(x)/x * (1 - 1/x^2 + 3/x^4 - 15/x^6)
    let x2 = x * x;
    let series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
    -0.5 * x2 - x.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln() + series.ln()
}

/// Standard normal density.
pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Natural-log sum of exponentials, shifted by the maximum term.
///
/// Returns `-inf` for an empty slice or when every term is `-inf`.
pub fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    let sum: f64 = terms.iter().map(|&t| (t - max).exp()).sum();
    max + sum.ln()
}
