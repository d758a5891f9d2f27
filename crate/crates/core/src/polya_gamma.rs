//! Pólya-Gamma `PG(b, c)` moments and samplers.
//!
//! Integer shapes are drawn as sums of exact `PG(1, c)` variates (Devroye-type
//! alternating-series accept-reject with a truncated inverse-Gaussian /
//! exponential mixture proposal). Other shapes use the defining sum of
//! gammas, truncated at [`DEFAULT_TRUNCATION`] terms with the dropped tail
//! replaced by its expectation.

use std::f64::consts::{FRAC_2_PI, PI};

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};

use crate::error::{Error, Result};
use crate::special::{ln_norm_cdf, log1p_exp};

/// Switch point of the piecewise `PG(1, c)` proposal.
const TRUNC: f64 = 0.64;
const MAX_ATTEMPTS: usize = 1_000_000;
/// Number of gamma terms kept for non-integer shapes.
pub const DEFAULT_TRUNCATION: usize = 200;
/// Integer shapes above this go through the gamma series instead of `b`
/// separate exact draws.
const MAX_EXACT_SHAPE: f64 = 1_000.0;

/// `E[omega]` for `omega ~ PG(b, c)`: `b / (2c) tanh(c / 2)`.
pub fn pg_mean(b: f64, c: f64) -> f64 {
    let c = c.abs();
    if c < 1e-4 {
        b * (0.25 - c * c / 48.0)
    } else {
        b / (2.0 * c) * (0.5 * c).tanh()
    }
}

/// `Var[omega]` for `omega ~ PG(b, c)`.
pub fn pg_variance(b: f64, c: f64) -> f64 {
    let c = c.abs();
    if c < 1e-2 {
        let c2 = c * c;
        b * (1.0 / 24.0 + c2 * (-1.0 / 120.0 + c2 * 17.0 / 13_440.0))
    } else if c > 40.0 {
        b / (2.0 * c * c * c) * (1.0 - 2.0 * c * (-c).exp())
    } else {
        let ch = (0.5 * c).cosh();
        b * (c.sinh() - c) / (4.0 * c * c * c * ch * ch)
    }
}

/// Draws `PG(b, c)`.
pub fn sample_pg<R: Rng + ?Sized>(b: f64, c: f64, rng: &mut R) -> Result<f64> {
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::InvalidParameter(format!("PG shape must be positive, got {b}")));
    }
    if b.fract() == 0.0 && b <= MAX_EXACT_SHAPE {
        let mut total = 0.0;
        for _ in 0..b as usize {
            total += sample_pg1(c, rng)?;
        }
        Ok(total)
    } else {
        sample_pg_series(b, c, DEFAULT_TRUNCATION, rng)
    }
}

/// Truncated sum-of-gammas draw with tail-mean correction.
///
/// `omega = 1/(2 pi^2) sum_k g_k / ((k - 1/2)^2 + c^2/(4 pi^2))`,
/// `g_k ~ Gamma(b, 1)`, for `k = 1..=terms`; the expectation of the remaining
/// terms is added so the draw is mean-exact for any truncation.
pub fn sample_pg_series<R: Rng + ?Sized>(b: f64, c: f64, terms: usize, rng: &mut R) -> Result<f64> {
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::InvalidParameter(format!("PG shape must be positive, got {b}")));
    }
    let gamma = Gamma::new(b, 1.0).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let tilt = c * c / (4.0 * PI * PI);
    let mut sum = 0.0;
    let mut kept_mean = 0.0;
    for k in 1..=terms {
        let h = k as f64 - 0.5;
        let denom = h * h + tilt;
        sum += gamma.sample(rng) / denom;
        kept_mean += b / denom;
    }
    let scale = 1.0 / (2.0 * PI * PI);
    let tail = (pg_mean(b, c) - scale * kept_mean).max(0.0);
    Ok(scale * sum + tail)
}

/// Exact `PG(1, c)` draw.
pub fn sample_pg1<R: Rng + ?Sized>(c: f64, rng: &mut R) -> Result<f64> {
    let z = 0.5 * c.abs();
    let k = PI * PI / 8.0 + 0.5 * z * z;
    let p_exp = exponential_mass(z);

    for _ in 0..MAX_ATTEMPTS {
        let x = if rng.random::<f64>() < p_exp {
            TRUNC + rng.sample::<f64, _>(Exp1) / k
        } else {
            truncated_inverse_gaussian(z, rng)
        };

        let mut s = series_term(0, x);
        let y = rng.random::<f64>() * s;
        let mut n = 0;
        loop {
            n += 1;
            if n % 2 == 1 {
                s -= series_term(n, x);
                if y <= s {
                    return Ok(0.25 * x);
                }
            } else {
                s += series_term(n, x);
                if y > s {
                    break;
                }
            }
            if n > 10_000 {
                break;
            }
        }
    }
    Err(Error::SamplerFailure(MAX_ATTEMPTS))
}

/// Mixture weight of the exponential (right) piece of the proposal.
fn exponential_mass(z: f64) -> f64 {
    let fz = PI * PI / 8.0 + 0.5 * z * z;
    let inv_sqrt_t = (1.0 / TRUNC).sqrt();
    let b = inv_sqrt_t * (TRUNC * z - 1.0);
    let a = -inv_sqrt_t * (TRUNC * z + 1.0);
    let x0 = fz.ln() + fz * TRUNC;
    let xb = x0 - z + ln_norm_cdf(b);
    let xa = x0 + z + ln_norm_cdf(a);
    let q_over_p = 4.0 / PI * (xb.exp() + xa.exp());
    1.0 / (1.0 + q_over_p)
}

/// Coefficients of the alternating series for the `J*(1, z)` density.
fn series_term(n: usize, x: f64) -> f64 {
    let h = n as f64 + 0.5;
    if x <= 0.0 {
        0.0
    } else if x <= TRUNC {
        PI * h * (FRAC_2_PI / x).powf(1.5) * (-2.0 * h * h / x).exp()
    } else {
        PI * h * (-0.5 * h * h * PI * PI * x).exp()
    }
}

/// Inverse-Gaussian `IG(1/z, 1)` restricted to `(0, TRUNC)`.
fn truncated_inverse_gaussian<R: Rng + ?Sized>(z: f64, rng: &mut R) -> f64 {
    let t = TRUNC;
    if z < 1.0 / t {
        // mean beyond the truncation point: chi-square-type proposal
        loop {
            let e1 = loop {
                let e1: f64 = rng.sample(Exp1);
                let e2: f64 = rng.sample(Exp1);
                if e1 * e1 <= 2.0 * e2 / t {
                    break e1;
                }
            };
            let x = 1.0 + e1 * t;
            let x = t / (x * x);
            let alpha = (-0.5 * z * z * x).exp();
            if rng.random::<f64>() <= alpha {
                return x;
            }
        }
    } else {
        let mu = 1.0 / z;
        loop {
            let nrm: f64 = rng.sample(StandardNormal);
            let y = mu * nrm * nrm;
            let mut x = mu + 0.5 * mu * y - 0.5 * mu * (4.0 * y + y * y).sqrt();
            if rng.random::<f64>() > mu / (mu + x) {
                x = mu * mu / x;
            }
            if x < t {
                return x;
            }
        }
    }
}

/// Both sides of the Pólya-Gamma Laplace identity
/// `(e^psi)^a / (1 + e^psi)^b = 2^-b e^(kappa psi) E[exp(-omega psi^2 / 2)]`,
/// `omega ~ PG(b, 0)`, `kappa = a - b/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceCheck {
    /// Closed form.
    pub lhs: f64,
    /// Monte Carlo estimate.
    pub rhs: f64,
    /// Standard error of `rhs`.
    pub rhs_se: f64,
}

impl LaplaceCheck {
    /// Discrepancy in units of the Monte Carlo standard error.
    pub fn z_score(&self) -> f64 {
        if self.rhs_se == 0.0 {
            if self.lhs == self.rhs {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.lhs - self.rhs) / self.rhs_se
        }
    }
}

pub fn pg_laplace_lhs_rhs<R: Rng + ?Sized>(
    a: f64,
    b: f64,
    psi: f64,
    draws: usize,
    rng: &mut R,
) -> Result<LaplaceCheck> {
    let lhs = (a * psi - b * log1p_exp(psi)).exp();
    let kappa = a - 0.5 * b;
    let prefactor = (kappa * psi - b * std::f64::consts::LN_2).exp();

    let mut mean = 0.0;
    let mut m2 = 0.0;
    for i in 0..draws {
        let omega = sample_pg(b, 0.0, rng)?;
        let v = (-0.5 * omega * psi * psi).exp();
        let delta = v - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (v - mean);
    }
    let var = if draws > 1 { m2 / (draws - 1) as f64 } else { 0.0 };
    Ok(LaplaceCheck {
        lhs,
        rhs: prefactor * mean,
        rhs_se: prefactor * (var / draws as f64).sqrt(),
    })
}
