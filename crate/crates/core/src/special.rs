//! Scalar helpers shared by the model and the samplers.

use std::f64::consts::PI;

/// `log(x!)`, table-backed for small `x` and Lanczos-based above.
pub fn ln_factorial(x: u64) -> f64 {
    statrs::function::factorial::ln_factorial(x)
}

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

/// Numerically stable `log(1 + e^x)`.
#[inline]
pub fn log1p_exp(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Softplus response `s_c(x) = c log(1 + exp(x / c))`.
#[inline]
pub fn softplus(x: f64, c: f64) -> f64 {
    c * log1p_exp(x / c)
}

/// Derivative of [`softplus`]: the logistic function at `x / c`.
#[inline]
pub fn softplus_deriv(x: f64, c: f64) -> f64 {
    logistic(x / c)
}

#[inline]
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

/// `log Φ(x)`; accurate far into the left tail.
pub fn ln_norm_cdf(x: f64) -> f64 {
    if x > -30.0 {
        norm_cdf(x).ln()
    } else {
        // Mills-ratio asymptotics
        let x2 = x * x;
        -0.5 * x2 - (-x).ln() - 0.5 * (2.0 * PI).ln() + (1.0 - 1.0 / x2 + 3.0 / (x2 * x2)).ln()
    }
}

/// Log density of `Gamma(shape, rate)` at `x > 0`.
pub fn gamma_ln_pdf(x: f64, shape: f64, rate: f64) -> f64 {
    if x <= 0.0 || !x.is_finite() {
        return f64::NEG_INFINITY;
    }
    shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x
}

/// Log Poisson mass.
#[inline]
pub fn poisson_ln_pmf(x: u64, lambda: f64) -> f64 {
    x as f64 * lambda.ln() - lambda - ln_factorial(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softplus_at_zero_is_c_log2() {
        assert!((softplus(0.0, 1.0) - 2f64.ln()).abs() < 1e-15);
        assert!((softplus(0.0, 2.5) - 2.5 * 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn softplus_is_stable_far_out() {
        assert!((softplus(800.0, 1.0) - 800.0).abs() < 1e-12);
        assert!(softplus(-800.0, 1.0) >= 0.0);
        assert!((softplus_deriv(1000.0, 1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ln_factorial_matches_direct_sum() {
        for x in [0u64, 1, 5, 20, 171, 500, 10_000] {
            let direct: f64 = (1..=x).map(|k| (k as f64).ln()).sum();
            assert!(
                (ln_factorial(x) - direct).abs() <= 1e-13 * direct.max(1.0),
                "x = {x}"
            );
        }
    }

    #[test]
    fn ln_norm_cdf_is_continuous_at_switch() {
        let a = ln_norm_cdf(-30.0 + 1e-9);
        let b = ln_norm_cdf(-30.0 - 1e-9);
        assert!((a - b).abs() < 1e-6);
    }
}
