//! Autocorrelation and effective sample size.

use crate::error::{Error, Result};

/// Effective sample size estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ess {
    pub value: f64,
    /// Set for constant input, where the value is defined as 0.
    pub degenerate: bool,
}

pub(crate) fn is_constant(x: &[f64]) -> bool {
    x.iter().all(|&v| v == x[0])
}

fn centered(x: &[f64]) -> (Vec<f64>, f64) {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let c: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let ss = c.iter().map(|v| v * v).sum();
    (c, ss)
}

fn autocov_sum(c: &[f64], lag: usize) -> f64 {
    c[..c.len() - lag].iter().zip(&c[lag..]).map(|(a, b)| a * b).sum()
}

/// Sample autocorrelations `rho_0..=rho_max_lag` with the biased
/// (divide-by-n) normalization.
pub fn acf(x: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    if max_lag >= x.len() {
        return Err(Error::InvalidParameter(format!(
            "max_lag {max_lag} must be below the series length {}",
            x.len()
        )));
    }
    let (c, ss) = centered(x);
    if is_constant(x) || !ss.is_finite() {
        return Err(Error::ZeroVariance("autocorrelation of a constant series".into()));
    }
    Ok((0..=max_lag).map(|k| if k == 0 { 1.0 } else { autocov_sum(&c, k) / ss }).collect())
}

/// ESS with Geyer's initial monotone positive sequence truncation.
///
/// Pairs `Gamma_m = rho_2m + rho_2m+1` are summed while positive, each
/// capped at its predecessor. The result is capped at `x.len()`.
pub fn ess(x: &[f64]) -> Result<Ess> {
    let n = x.len();
    if n < 100 {
        return Err(Error::InvalidParameter(format!("ESS needs at least 100 draws, got {n}")));
    }
    let (c, ss) = centered(x);
    if is_constant(x) {
        return Ok(Ess {
            value: 0.0,
            degenerate: true,
        });
    }
    let rho = |k: usize| autocov_sum(&c, k) / ss;

    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    let mut m = 0;
    while 2 * m + 1 < n {
        let pair = if m == 0 { 1.0 + rho(1) } else { rho(2 * m) + rho(2 * m + 1) };
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev);
        sum += pair;
        prev = pair;
        m += 1;
    }
    // tau = -1 + 2 sum_m Gamma_m
    let tau = (2.0 * sum - 1.0).max(1.0 / n as f64);
    Ok(Ess {
        value: (n as f64 / tau).min(n as f64),
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn acf_lag_zero_and_alternating() {
        let x: Vec<f64> = (0..1000).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let r = acf(&x, 3).unwrap();
        assert_eq!(r[0], 1.0);
        assert!((r[1] + 1.0).abs() < 2e-3);
        assert!((r[2] - 1.0).abs() < 3e-3);
    }

    #[test]
    fn acf_errors() {
        assert!(acf(&[1.0; 10], 2).is_err());
        assert!(acf(&[1.0, 2.0, 3.0], 3).is_err());
    }

    #[test]
    fn constant_chain_is_degenerate() {
        let e = ess(&[0.5; 200]).unwrap();
        assert_eq!(e.value, 0.0);
        assert!(e.degenerate);
    }

    #[test]
    fn short_chain_rejected() {
        assert!(ess(&[0.0; 50]).is_err());
    }
}
