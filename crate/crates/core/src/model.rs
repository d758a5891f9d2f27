//! Poisson INGARCH(1,1) models under the log-linear and softplus links.
//!
//! Log-linear: `nu_t = alpha0 + alpha1 nu_{t-1} + beta1 log(1 + x_{t-1})`,
//! `lambda_t = exp(nu_t)`, seeded with `nu_0 = log(lambda0)`.
//!
//! Softplus: `lambda_t = s_c(alpha0 + alpha1 lambda_{t-1} + beta1 x_{t-1})`,
//! seeded with `lambda0` directly.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::special::{ln_factorial, softplus};
use crate::Theta;

/// Largest admissible `|nu_t|` before `exp` is considered to have overflowed.
pub const MAX_LOG_INTENSITY: f64 = 700.0;

/// Observed counts `x_0, x_1, ..., x_n`; `x_0` is the conditioning value.
#[derive(Debug, Clone, PartialEq)]
pub struct CountSeries {
    values: Vec<u64>,
    ln_factorial_sum: f64,
}

impl CountSeries {
    /// Requires at least two values (`x_0` plus one modelled observation).
    pub fn new(values: Vec<u64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidSeries(format!(
                "need at least 2 counts, got {}",
                values.len()
            )));
        }
        Ok(Self::build(values))
    }

    /// A series holding only `x_0`, i.e. no modelled observations.
    ///
    /// Used for prior-only runs; every likelihood over it is identically zero.
    pub fn initial_only(x0: u64) -> Self {
        Self::build(vec![x0])
    }

    fn build(values: Vec<u64>) -> Self {
        let ln_factorial_sum = values[1..].iter().map(|&x| ln_factorial(x)).sum();
        Self {
            values,
            ln_factorial_sum,
        }
    }

    /// All counts including `x_0`.
    pub fn values(&self) -> &[u64] {
        &self.values
    }

    /// The modelled segment `x_1..x_n`.
    pub fn observed(&self) -> &[u64] {
        &self.values[1..]
    }

    /// Number of modelled observations.
    pub fn n(&self) -> usize {
        self.values.len() - 1
    }

    pub fn x0(&self) -> u64 {
        self.values[0]
    }

    /// Mean of the modelled segment (falls back to `x_0` when empty).
    pub fn mean(&self) -> f64 {
        let obs = self.observed();
        if obs.is_empty() {
            self.values[0] as f64
        } else {
            obs.iter().map(|&x| x as f64).sum::<f64>() / obs.len() as f64
        }
    }

    pub(crate) fn ln_factorial_sum(&self) -> f64 {
        self.ln_factorial_sum
    }
}

/// Link function of the intensity recursion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelSpec {
    LogLinear,
    /// Softplus response with scale `c > 0`.
    Softplus { scale: f64 },
}

impl ModelSpec {
    pub fn softplus(scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "softplus scale must be positive, got {scale}"
            )));
        }
        Ok(ModelSpec::Softplus { scale })
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::LogLinear => "log-linear",
            ModelSpec::Softplus { .. } => "softplus",
        }
    }
}

/// `(alpha0, alpha1, beta1)` plus the initial intensity `lambda0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    pub alpha0: f64,
    pub alpha1: f64,
    pub beta1: f64,
    pub lambda0: f64,
}

impl Params {
    pub fn new(alpha0: f64, alpha1: f64, beta1: f64, lambda0: f64) -> Self {
        Self {
            alpha0,
            alpha1,
            beta1,
            lambda0,
        }
    }

    pub fn theta(&self) -> Theta {
        Theta::new(self.alpha0, self.alpha1, self.beta1)
    }

    pub fn with_theta(&self, theta: &Theta) -> Self {
        Self {
            alpha0: theta[0],
            alpha1: theta[1],
            beta1: theta[2],
            lambda0: self.lambda0,
        }
    }

    pub fn with_lambda0(&self, lambda0: f64) -> Self {
        Self { lambda0, ..*self }
    }

    fn check_lambda0(&self) -> Result<()> {
        if self.lambda0 > 0.0 && self.lambda0.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "lambda0 must be positive, got {}",
                self.lambda0
            )))
        }
    }
}

/// Intensities `lambda_1..lambda_n` and linear predictors `eta_1..eta_n`.
///
/// For the log-linear link `eta_t = nu_t = log lambda_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityPath {
    pub lambda: Vec<f64>,
    pub eta: Vec<f64>,
}

impl IntensityPath {
    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }
}

/// Runs the recursion, handing `(t, eta_t, lambda_t)` to `visit` for t = 1..n.
///
/// `t` in the callback is 1-based. Fails on the first overflowing step.
#[inline]
pub(crate) fn walk_intensity<F>(spec: &ModelSpec, params: &Params, counts: &[u64], mut visit: F) -> Result<()>
where
    F: FnMut(usize, f64, f64),
{
    params.check_lambda0()?;
    let (a0, a1, b1) = (params.alpha0, params.alpha1, params.beta1);
    match *spec {
        ModelSpec::LogLinear => {
            let mut nu = params.lambda0.ln();
            for t in 1..counts.len() {
                nu = a0 + a1 * nu + b1 * (counts[t - 1] as f64).ln_1p();
                if !(nu.abs() <= MAX_LOG_INTENSITY) {
                    return Err(Error::IntensityOverflow { t, value: nu });
                }
                visit(t, nu, nu.exp());
            }
        }
        ModelSpec::Softplus { scale } => {
            let mut lambda = params.lambda0;
            for t in 1..counts.len() {
                let eta = a0 + a1 * lambda + b1 * counts[t - 1] as f64;
                lambda = softplus(eta, scale);
                if !(lambda > 0.0 && lambda.is_finite()) {
                    return Err(Error::IntensityOverflow { t, value: eta });
                }
                visit(t, eta, lambda);
            }
        }
    }
    Ok(())
}

/// Deterministic intensity path given parameters and the realized counts.
pub fn intensity_path(spec: &ModelSpec, params: &Params, x: &CountSeries) -> Result<IntensityPath> {
    let n = x.n();
    let mut lambda = Vec::with_capacity(n);
    let mut eta = Vec::with_capacity(n);
    walk_intensity(spec, params, x.values(), |_, e, l| {
        eta.push(e);
        lambda.push(l);
    })?;
    Ok(IntensityPath { lambda, eta })
}

/// Exact Poisson log-likelihood `sum_t x_t log lambda_t - lambda_t - log x_t!`.
pub fn log_likelihood(spec: &ModelSpec, params: &Params, x: &CountSeries) -> Result<f64> {
    let values = x.values();
    let mut acc = 0.0;
    match spec {
        // log lambda_t is the predictor itself; avoids a log per step
        ModelSpec::LogLinear => walk_intensity(spec, params, values, |t, nu, lambda| {
            acc += values[t] as f64 * nu - lambda;
        })?,
        ModelSpec::Softplus { .. } => walk_intensity(spec, params, values, |t, _, lambda| {
            acc += values[t] as f64 * lambda.ln() - lambda;
        })?,
    }
    Ok(acc - x.ln_factorial_sum())
}

/// Membership in the link-appropriate stationarity region.
///
/// Log-linear: `|a1| < 1` and either `b1 > 0, |a1 + b1| < 1` or
/// `b1 < 0, |a1| |a1 + b1| < 1`. Softplus: `a0 > 0`, `a1, b1 >= 0`,
/// `a1 + b1 < 1`. Non-finite coefficients are never stationary.
pub fn check_stationarity(spec: &ModelSpec, params: &Params) -> bool {
    is_stationary(spec, &params.theta())
}

pub fn is_stationary(spec: &ModelSpec, theta: &Theta) -> bool {
    let (a0, a1, b1) = (theta[0], theta[1], theta[2]);
    if !(a0.is_finite() && a1.is_finite() && b1.is_finite()) {
        return false;
    }
    match spec {
        ModelSpec::LogLinear => {
            a1.abs() < 1.0
                && ((b1 > 0.0 && (a1 + b1).abs() < 1.0)
                    || (b1 < 0.0 && a1.abs() * (a1 + b1).abs() < 1.0))
        }
        ModelSpec::Softplus { .. } => a0 > 0.0 && a1 >= 0.0 && b1 >= 0.0 && a1 + b1 < 1.0,
    }
}

/// Simulates `x_0..x_n` with `x_0 ~ Poisson(lambda0)` and the recursion
/// driven by the realized counts.
pub fn simulate(spec: &ModelSpec, params: &Params, n: usize, seed: u64) -> Result<CountSeries> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    simulate_with(spec, params, n, &mut rng)
}

pub fn simulate_with<R: rand::Rng + ?Sized>(
    spec: &ModelSpec,
    params: &Params,
    n: usize,
    rng: &mut R,
) -> Result<CountSeries> {
    if !check_stationarity(spec, params) {
        return Err(Error::NonStationary(format!(
            "({}, {}, {})",
            params.alpha0, params.alpha1, params.beta1
        )));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    params.check_lambda0()?;

    let mut values = Vec::with_capacity(n + 1);
    values.push(draw_poisson(params.lambda0, rng));
    let (a0, a1, b1) = (params.alpha0, params.alpha1, params.beta1);
    match *spec {
        ModelSpec::LogLinear => {
            let mut nu = params.lambda0.ln();
            for t in 1..=n {
                nu = a0 + a1 * nu + b1 * (values[t - 1] as f64).ln_1p();
                if nu.abs() > MAX_LOG_INTENSITY {
                    return Err(Error::IntensityOverflow { t, value: nu });
                }
                values.push(draw_poisson(nu.exp(), rng));
            }
        }
        ModelSpec::Softplus { scale } => {
            let mut lambda = params.lambda0;
            for t in 1..=n {
                lambda = softplus(a0 + a1 * lambda + b1 * values[t - 1] as f64, scale);
                values.push(draw_poisson(lambda, rng));
            }
        }
    }
    CountSeries::new(values)
}

fn draw_poisson<R: rand::Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    let d = Poisson::new(lambda).expect("finite positive intensity");
    d.sample(rng) as u64
}
