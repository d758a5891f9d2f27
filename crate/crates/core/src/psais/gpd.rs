//! Generalized Pareto fits to tail exceedances.
//!
//! Parameterization: `F(y) = 1 - (1 + k y / sigma)^(-1/k)`, `k = 0` being the
//! exponential. With `b = k / sigma` the likelihood profiles to
//! `n (log(b / k(b)) - k(b) - 1)` where `k(b) = mean(log1p(b y))`, so both
//! estimators below search over `b` only.

use crate::error::{Error, Result};

/// Grid offset of the profile-posterior estimator.
const MIN_GRID_POINTS: usize = 30;
/// Prior scale of the profile-posterior grid.
const GRID_PRIOR: f64 = 3.0;
/// Pseudo-count and location of the weak prior on `k`.
const K_PRIOR_WEIGHT: f64 = 10.0;
const K_PRIOR_MEAN: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GpdMethod {
    /// Posterior-weighted average over a profile grid in `b`, with the
    /// resulting `k` shrunk slightly toward 0.5.
    #[default]
    ProfilePosterior,
    /// Profile maximum likelihood.
    MaxLikelihood,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpdFit {
    pub k_hat: f64,
    pub sigma_hat: f64,
    pub location_u: f64,
    /// Number of exceedances.
    pub m: usize,
}

impl GpdFit {
    /// `F^-1(p)`.
    pub fn quantile(&self, p: f64) -> f64 {
        gpd_quantile(p, self.k_hat, self.sigma_hat, self.location_u)
    }
}

pub fn gpd_quantile(p: f64, k: f64, sigma: f64, u: f64) -> f64 {
    if k.abs() < 1e-12 {
        u - sigma * (-p).ln_1p()
    } else {
        u + sigma / k * ((-k * (-p).ln_1p()).exp() - 1.0)
    }
}

/// `k(b) = mean(log1p(b y))`.
fn shape_at(b: f64, y: &[f64]) -> f64 {
    y.iter().map(|&v| (b * v).ln_1p()).sum::<f64>() / y.len() as f64
}

/// Profile log-likelihood per observation; `-inf` outside `b > -1/max(y)`.
fn profile(b: f64, y: &[f64], mean: f64) -> f64 {
    if b.abs() < 1e-300 {
        return -mean.ln() - 1.0;
    }
    let k = shape_at(b, y);
    let ratio = b / k;
    if !(ratio > 0.0 && ratio.is_finite()) {
        return f64::NEG_INFINITY;
    }
    ratio.ln() - k - 1.0
}

/// Fits a GPD to `exceedances` (each `>= 0`) at threshold `location_u`.
pub fn fit_gpd(exceedances: &[f64], location_u: f64, method: GpdMethod) -> Result<GpdFit> {
    let n = exceedances.len();
    if n < 5 {
        return Err(Error::InvalidParameter(format!("GPD fit needs at least 5 exceedances, got {n}")));
    }
    if exceedances.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidParameter("exceedances must be finite and non-negative".into()));
    }
    let mut y = exceedances.to_vec();
    y.sort_by(f64::total_cmp);
    if y[0] == y[n - 1] {
        return Err(Error::DegenerateTail(format!("all {n} exceedances equal {}", y[0])));
    }
    let mean = y.iter().sum::<f64>() / n as f64;
    let y_max = y[n - 1];
    let quartile = y[((n as f64 / 4.0 + 0.5).floor() as usize).max(1) - 1];
    let scale = if quartile > 0.0 { quartile } else { mean };

    let grid_len = MIN_GRID_POINTS + (n as f64).sqrt().floor() as usize;
    // b_j runs from large positive values down to just above -1/max(y)
    let grid: Vec<f64> = (1..=grid_len)
        .map(|j| -1.0 / y_max - (1.0 - (grid_len as f64 / (j as f64 - 0.5)).sqrt()) / GRID_PRIOR / scale)
        .collect();

    let b_hat = match method {
        GpdMethod::ProfilePosterior => {
            let ll: Vec<f64> = grid.iter().map(|&b| n as f64 * profile(b, &y, mean)).collect();
            let top = ll.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let w: Vec<f64> = ll.iter().map(|l| (l - top).exp()).collect();
            let total: f64 = w.iter().sum();
            grid.iter().zip(&w).map(|(b, w)| b * w / total).sum()
        }
        GpdMethod::MaxLikelihood => max_profile(&y, mean, y_max, &grid),
    };

    let k = shape_at(b_hat, &y);
    let sigma = if b_hat.abs() < 1e-300 { mean } else { k / b_hat };
    if !(sigma > 0.0 && sigma.is_finite() && k.is_finite()) {
        return Err(Error::DegenerateTail(format!("GPD fit produced k = {k}, sigma = {sigma}")));
    }
    let k_hat = match method {
        GpdMethod::ProfilePosterior => (k * n as f64 + K_PRIOR_WEIGHT * K_PRIOR_MEAN) / (n as f64 + K_PRIOR_WEIGHT),
        GpdMethod::MaxLikelihood => k,
    };
    Ok(GpdFit {
        k_hat,
        sigma_hat: sigma,
        location_u,
        m: n,
    })
}

/// Maximizes the profile over `b`: best point of a dense grid, then golden
/// section between its neighbours.
fn max_profile(y: &[f64], mean: f64, y_max: f64, coarse: &[f64]) -> f64 {
    let lower = -1.0 / y_max;
    let upper = coarse.iter().copied().fold(f64::NEG_INFINITY, f64::max) * 10.0;
    // dense grid in an asinh-type spacing that resolves b near 0
    let steps = 2_000;
    let (lo_t, hi_t) = ((lower * (1.0 - 1e-9)).asinh(), upper.asinh());
    let grid: Vec<f64> = (0..=steps)
        .map(|i| (lo_t + (hi_t - lo_t) * i as f64 / steps as f64).sinh())
        .collect();
    let f = |b: f64| profile(b, y, mean);
    let (best, _) = grid
        .iter()
        .enumerate()
        .map(|(i, &b)| (i, f(b)))
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    let mut a = grid[best.saturating_sub(1)];
    let mut c = grid[(best + 1).min(steps)];
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = c - phi * (c - a);
    let mut x2 = a + phi * (c - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if (c - a).abs() <= 1e-14 * (a.abs() + c.abs()).max(1e-300) {
            break;
        }
        if f1 >= f2 {
            c = x2;
            x2 = x1;
            f2 = f1;
            x1 = c - phi * (c - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (c - a);
            f2 = f(x2);
        }
    }
    0.5 * (a + c)
}
