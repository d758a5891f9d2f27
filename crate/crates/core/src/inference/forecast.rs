//! One-step-ahead residuals and forecast scores.

use crate::error::{Error, Result};
use crate::model::{intensity_path, CountSeries, ModelSpec, Params};
use crate::special::poisson_ln_pmf;

/// Largest number of draws used for the forecast averages.
pub const MAX_FORECAST_DRAWS: usize = 1_000;

/// Standardized Pearson residuals `(x_t - lambda_t) / sqrt(lambda_t)`.
pub fn pearson_residuals(spec: &ModelSpec, params: &Params, x: &CountSeries) -> Result<Vec<f64>> {
    let path = intensity_path(spec, params, x)?;
    Ok(x
        .observed()
        .iter()
        .zip(&path.lambda)
        .map(|(&xt, &l)| (xt as f64 - l) / l.sqrt())
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForecastReport {
    pub mae: f64,
    pub rmse: f64,
    /// Sum over t of the log predictive density.
    pub lpd: f64,
}

/// How the point forecast `m_t` is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PointForecast {
    /// Average of `lambda_t` over draws.
    #[default]
    DrawAverage,
    /// `lambda_t` at the mean of the draws.
    PlugIn,
}

/// Evenly spaced subset of at most `max` draws.
pub fn thin<T: Clone>(draws: &[T], max: usize) -> Vec<T> {
    if draws.len() <= max {
        return draws.to_vec();
    }
    let step = draws.len() as f64 / max as f64;
    (0..max).map(|i| draws[(i as f64 * step) as usize].clone()).collect()
}

/// MAE, RMSE and LPD of one-step-ahead forecasts over `x_1..x_n`.
///
/// Draws are thinned to [`MAX_FORECAST_DRAWS`].
pub fn forecast_metrics(
    spec: &ModelSpec,
    draws: &[Params],
    x: &CountSeries,
    point: PointForecast,
) -> Result<ForecastReport> {
    if draws.is_empty() {
        return Err(Error::InvalidParameter("forecast needs at least one draw".into()));
    }
    let draws = thin(draws, MAX_FORECAST_DRAWS);
    let obs = x.observed();
    let n = obs.len();
    let k = draws.len() as f64;

    let mut lambda_sum = vec![0.0; n];
    // running log-sum-exp per t
    let mut lse_max = vec![f64::NEG_INFINITY; n];
    let mut lse_sum = vec![0.0; n];
    for p in &draws {
        let path = intensity_path(spec, p, x)?;
        for t in 0..n {
            lambda_sum[t] += path.lambda[t];
            let lp = poisson_ln_pmf(obs[t], path.lambda[t]);
            if lp > lse_max[t] {
                lse_sum[t] = lse_sum[t] * (lse_max[t] - lp).exp() + 1.0;
                lse_max[t] = lp;
            } else {
                lse_sum[t] += (lp - lse_max[t]).exp();
            }
        }
    }
    let lpd = (0..n).map(|t| lse_max[t] + (lse_sum[t] / k).ln()).sum();

    let m: Vec<f64> = match point {
        PointForecast::DrawAverage => lambda_sum.iter().map(|s| s / k).collect(),
        PointForecast::PlugIn => {
            let mut mean = [0.0; 4];
            for p in &draws {
                mean[0] += p.alpha0 / k;
                mean[1] += p.alpha1 / k;
                mean[2] += p.beta1 / k;
                mean[3] += p.lambda0 / k;
            }
            intensity_path(spec, &Params::new(mean[0], mean[1], mean[2], mean[3]), x)?.lambda
        }
    };
    let (mut abs, mut sq) = (0.0, 0.0);
    for (&xt, &mt) in obs.iter().zip(&m) {
        let e = xt as f64 - mt;
        abs += e.abs();
        sq += e * e;
    }
    Ok(ForecastReport {
        mae: abs / n as f64,
        rmse: (sq / n as f64).sqrt(),
        lpd,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residual_examples() {
        // zero coefficients with log-linear link give lambda_t = 1
        let x = CountSeries::new(vec![0, 1, 3]).unwrap();
        let r = pearson_residuals(&ModelSpec::LogLinear, &Params::new(0.0, 0.0, 0.0, 1.0), &x).unwrap();
        assert_eq!(r, vec![0.0, 2.0]);
        let x = CountSeries::new(vec![0, 6]).unwrap();
        let p = Params::new(4f64.ln(), 0.0, 0.0, 1.0);
        let r = pearson_residuals(&ModelSpec::LogLinear, &p, &x).unwrap();
        assert!((r[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn single_draw_constant_intensity() {
        let x = CountSeries::new(vec![2, 0, 1, 5, 2]).unwrap();
        let p = Params::new(2f64.ln(), 0.0, 0.0, 1.0);
        let rep = forecast_metrics(&ModelSpec::LogLinear, &[p], &x, PointForecast::DrawAverage).unwrap();
        assert!((rep.mae - (2.0 + 1.0 + 3.0 + 0.0) / 4.0).abs() < 1e-12);
        assert!((rep.rmse - (14.0f64 / 4.0).sqrt()).abs() < 1e-12);
        let lpd: f64 = [0, 1, 5, 2].iter().map(|&v| poisson_ln_pmf(v, 2.0)).sum();
        assert!((rep.lpd - lpd).abs() < 1e-12);
        assert!(rep.mae <= rep.rmse);
    }

    #[test]
    fn empty_draws_rejected() {
        let x = CountSeries::new(vec![2, 0]).unwrap();
        assert!(forecast_metrics(&ModelSpec::LogLinear, &[], &x, PointForecast::PlugIn).is_err());
    }

    #[test]
    fn thinning_keeps_at_most_max() {
        let v: Vec<usize> = (0..2500).collect();
        let t = thin(&v, 1000);
        assert_eq!(t.len(), 1000);
        assert_eq!(t[0], 0);
        assert!(t.windows(2).all(|w| w[0] < w[1]));
    }
}
