//! Posterior summaries and plot data for MH chains.

use crate::error::{Error, Result};
use crate::inference::diagnostics::{ess, is_constant};
use crate::mh::ChainResult;

pub const PARAM_NAMES: [&str; 4] = ["alpha0", "alpha1", "beta1", "lambda0"];

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSummary {
    pub name: &'static str,
    pub mean: f64,
    pub sd: f64,
    pub q025: f64,
    pub q50: f64,
    pub q975: f64,
    pub ess: f64,
    pub ess_degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    pub params: Vec<ParamSummary>,
    pub acceptance_rate: f64,
    pub lambda0_acceptance_rate: f64,
    pub kept: usize,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn summarize(name: &'static str, v: &[f64]) -> Result<ParamSummary> {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = if v.len() > 1 && !is_constant(v) {
        (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let (ess_value, degenerate) = if v.len() >= 100 {
        let e = ess(v)?;
        (e.value, e.degenerate)
    } else {
        (f64::NAN, false)
    };
    Ok(ParamSummary {
        name,
        mean,
        sd,
        q025: quantile_sorted(&s, 0.025),
        q50: quantile_sorted(&s, 0.5),
        q975: quantile_sorted(&s, 0.975),
        ess: ess_value,
        ess_degenerate: degenerate,
    })
}

/// Moments, quantiles and ESS of the draws after `burn_in`.
///
/// ESS is reported as NaN when fewer than 100 draws are kept.
pub fn posterior_summary(chain: &ChainResult, burn_in: usize) -> Result<PosteriorSummary> {
    if burn_in >= chain.len() {
        return Err(Error::InvalidParameter(format!(
            "burn_in {burn_in} leaves no draws out of {}",
            chain.len()
        )));
    }
    let kept = &chain.draws[burn_in..];
    let params = (0..4)
        .map(|j| summarize(PARAM_NAMES[j], &kept.iter().map(|d| d[j]).collect::<Vec<_>>()))
        .collect::<Result<Vec<_>>>()?;
    let rate = |f: &[bool]| f.iter().filter(|&&a| a).count() as f64 / f.len() as f64;
    Ok(PosteriorSummary {
        params,
        acceptance_rate: rate(&chain.accepted_theta[burn_in..]),
        lambda0_acceptance_rate: rate(&chain.accepted_lambda0[burn_in..]),
        kept: kept.len(),
    })
}

/// Cumulative means `m_k = mean(v[..=k])`.
pub fn running_mean(v: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    v.iter()
        .enumerate()
        .map(|(i, x)| {
            acc += x;
            acc / (i + 1) as f64
        })
        .collect()
}

/// Gaussian kernel density on `points` equally spaced grid values spanning
/// the data plus three bandwidths, with Silverman's bandwidth.
pub fn density_grid(v: &[f64], points: usize) -> Vec<(f64, f64)> {
    if v.is_empty() || points < 2 {
        return Vec::new();
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let iqr = quantile_sorted(&s, 0.75) - quantile_sorted(&s, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    let bw = if spread > 0.0 {
        0.9 * spread * n.powf(-0.2)
    } else {
        1e-3 * mean.abs().max(1.0)
    };
    let (lo, hi) = (s[0] - 3.0 * bw, s[s.len() - 1] + 3.0 * bw);
    let norm = 1.0 / (n * bw * (2.0 * std::f64::consts::PI).sqrt());
    (0..points)
        .map(|i| {
            let g = lo + (hi - lo) * i as f64 / (points - 1) as f64;
            let d: f64 = v.iter().map(|x| (-0.5 * ((g - x) / bw).powi(2)).exp()).sum();
            (g, d * norm)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(draws: Vec<[f64; 4]>) -> ChainResult {
        let n = draws.len();
        ChainResult {
            draws,
            accepted_theta: vec![true; n],
            accepted_lambda0: vec![false; n],
            mean_r: vec![1.0; n],
            fallback_iterations: vec![],
            seed: 0,
            chain_index: 0,
            burn_in: 0,
        }
    }

    #[test]
    fn constant_draws() {
        let s = posterior_summary(&chain(vec![[0.1, 0.2, 0.3, 1.0]; 300]), 100).unwrap();
        for p in &s.params {
            assert_eq!(p.sd, 0.0);
            assert_eq!(p.q025, p.q975);
            assert!(p.ess_degenerate);
        }
        assert_eq!(s.kept, 200);
        assert_eq!(s.acceptance_rate, 1.0);
    }

    #[test]
    fn quantile_interpolates() {
        let s = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&s, 0.5), 2.5);
        assert_eq!(quantile_sorted(&s, 0.0), 1.0);
        assert_eq!(quantile_sorted(&s, 1.0), 4.0);
    }

    #[test]
    fn burn_in_must_leave_draws() {
        assert!(posterior_summary(&chain(vec![[0.0; 4]; 10]), 10).is_err());
    }

    #[test]
    fn running_mean_and_density() {
        assert_eq!(running_mean(&[1.0, 3.0, 5.0]), vec![1.0, 2.0, 3.0]);
        let v: Vec<f64> = (0..200).map(|i| (i as f64 / 20.0).sin()).collect();
        let d = density_grid(&v, 64);
        let dx = d[1].0 - d[0].0;
        let mass: f64 = d.iter().map(|p| p.1 * dx).sum();
        assert!((mass - 1.0).abs() < 0.02, "{mass}");
    }
}
