//! Negative-binomial approximation of the Poisson terms.
//!
//! For `X ~ Poi(lambda)` and `V ~ NB(r, r / (lambda + r))` the CDF ratio gap
//! `sup_x |P(X <= x) / P(V <= x) - 1|` is bounded by
//! `1 - exp(-lambda) (1 + lambda / r)^r`. Fixing a tolerance `d` on that bound
//! determines every `r_t` from the current intensity.

use crate::error::{Error, Result};
use crate::model::CountSeries;

/// Default tolerance on the Poisson/NB discrepancy.
pub const DEFAULT_TOLERANCE: f64 = 0.01;

/// Relative width of the final `log r` bracket.
const R_RELATIVE_PRECISION: f64 = 1e-10;

/// Per-observation NB shapes and the Pólya-Gamma working quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct NbSchedule {
    pub tolerance: f64,
    /// `r_1..r_n`.
    pub r: Vec<f64>,
    /// `psi_t = log lambda_t - log r_t`.
    pub psi: Vec<f64>,
    /// `kappa_t = (x_t - r_t) / 2`.
    pub kappa: Vec<f64>,
}

impl NbSchedule {
    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn mean_r(&self) -> f64 {
        if self.r.is_empty() {
            0.0
        } else {
            self.r.iter().sum::<f64>() / self.r.len() as f64
        }
    }
}

/// `r log(1 + lambda / r) - lambda`, i.e. `log(1 - discrepancy)`.
///
/// Expanded in `lambda / r` when that ratio is small to avoid cancellation.
#[inline]
fn log_complement(lambda: f64, r: f64) -> f64 {
    let u = lambda / r;
    if u < 1e-3 {
        // r log1p(u) - lambda = lambda (log1p(u)/u - 1)
        lambda * u * (-0.5 + u * (1.0 / 3.0 + u * (-0.25 + u * (0.2 - u / 6.0))))
    } else {
        r * u.ln_1p() - lambda
    }
}

/// Derivative of [`log_complement`] with respect to `log r`.
#[inline]
fn log_complement_slope(lambda: f64, r: f64) -> f64 {
    let u = lambda / r;
    let g = if u < 1e-3 {
        // log1p(u) - u/(1+u)
        u * u * (0.5 + u * (-2.0 / 3.0 + u * (0.75 - 0.8 * u)))
    } else {
        u.ln_1p() - u / (1.0 + u)
    };
    r * g
}

/// `1 - exp(-lambda) (1 + lambda / r)^r`, in `[0, 1)`.
pub fn discrepancy(lambda: f64, r: f64) -> f64 {
    -log_complement(lambda, r).exp_m1()
}

/// Smallest `r` with `discrepancy(lambda, r) <= d_max`, to relative
/// precision 1e-10.
///
/// The root of `log_complement(lambda, r) = log(1 - d_max)` is bracketed in
/// `log r` and refined with bisection-safeguarded Newton steps; the upper
/// end of the final bracket is returned so the tolerance always holds.
///
/// If even `r -> 0` meets the tolerance (`d_max >= 1 - exp(-lambda)`) there
/// is no smallest value and `lambda * 1e-6` is returned.
pub fn select_r(lambda: f64, d_max: f64) -> f64 {
    debug_assert!(lambda > 0.0 && d_max > 0.0 && d_max < 1.0);
    let target = (-d_max).ln_1p();
    if -lambda >= target {
        return lambda * 1e-6;
    }

    // f increases in log r; f >= 0 is the feasible side.
    let f = |log_r: f64| log_complement(lambda, log_r.exp()) - target;

    // Leading-order guess r ~ lambda^2 / (-2 target).
    let guess = (lambda * lambda / (-2.0 * target)).max(lambda * 1e-3);
    let mut lo = (guess / 4.0).min(lambda / 10.0).ln();
    let mut hi = (guess * 4.0).max(lambda / 10.0).ln();
    while f(lo) >= 0.0 {
        lo -= std::f64::consts::LN_10;
    }
    while f(hi) < 0.0 {
        hi += std::f64::consts::LN_10;
    }

    let eps = 0.25 * R_RELATIVE_PRECISION;
    let mut x = guess.ln().clamp(lo, hi);
    for _ in 0..200 {
        if hi - lo < R_RELATIVE_PRECISION {
            break;
        }
        let fx = f(x);
        if fx >= 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let slope = log_complement_slope(lambda, x.exp());
        let step = fx / slope;
        if slope > 0.0 && step.abs() < eps {
            // Newton has converged; pinch the bracket around x
            if x - eps > lo && f(x - eps) < 0.0 {
                lo = x - eps;
            }
            if x + eps < hi && f(x + eps) >= 0.0 {
                hi = x + eps;
            }
            x = 0.5 * (lo + hi);
            continue;
        }
        let newton = x - step;
        x = if slope > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    let mut r = hi.exp();
    while discrepancy(lambda, r) > d_max {
        r *= 1.0 + 1e-12;
    }
    r
}

/// Per-`t` shapes for the intensity path `lambda` against the counts `x`.
pub fn build_schedule(lambda: &[f64], x: &CountSeries, d_max: f64) -> Result<NbSchedule> {
    if !(d_max > 0.0 && d_max < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "nb_tolerance must lie in (0, 1), got {d_max}"
        )));
    }
    let r: Vec<f64> = lambda.iter().map(|&l| select_r(l, d_max)).collect();
    schedule_from_r(lambda, x, r, d_max)
}

/// Completes a schedule from precomputed shapes (e.g. a frozen `r`).
pub fn schedule_from_r(lambda: &[f64], x: &CountSeries, r: Vec<f64>, tolerance: f64) -> Result<NbSchedule> {
    let obs = x.observed();
    if lambda.len() != obs.len() || r.len() != obs.len() {
        return Err(Error::InvalidParameter(format!(
            "length mismatch: {} intensities, {} shapes, {} observations",
            lambda.len(),
            r.len(),
            obs.len()
        )));
    }
    let psi = lambda.iter().zip(&r).map(|(&l, &r)| l.ln() - r.ln()).collect();
    let kappa = obs.iter().zip(&r).map(|(&x, &r)| 0.5 * (x as f64 - r)).collect();
    Ok(NbSchedule {
        tolerance,
        r,
        psi,
        kappa,
    })
}

/// NB log-likelihood with `p_t = r_t / (lambda_t + r_t)`, including all
/// normalizing terms.
pub fn nb_log_likelihood(lambda: &[f64], r: &[f64], x: &CountSeries) -> f64 {
    use crate::special::{ln_factorial, ln_gamma};
    x.observed()
        .iter()
        .zip(lambda.iter().zip(r))
        .map(|(&xt, (&l, &r))| {
            let xf = xt as f64;
            ln_gamma(r + xf) - ln_gamma(r) - ln_factorial(xt) + r * (r / (r + l)).ln() + xf * (l / (r + l)).ln()
        })
        .sum()
}
