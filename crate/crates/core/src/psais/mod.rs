//! Pareto-smoothed adaptive importance sampling for `theta`.
//!
//! Draw `s` comes from the state-dependent proposal built at the current
//! center; the center moves to the draw only when the draw has strictly
//! higher posterior density. Ratios are formed against the proposal actually
//! used, the largest `M` are replaced by fitted GPD quantiles, and the
//! self-normalized weights give the estimate. `lambda0` is held fixed.

pub mod gpd;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::inference::mle::mle_fit;
use crate::mh::{log_posterior, PriorSpec, FALLBACK_SCALE};
use crate::model::{is_stationary, CountSeries, ModelSpec, Params};
use crate::nb::DEFAULT_TOLERANCE;
use crate::proposal::{GaussianProposal, LogLinearDesign, ProposalFactory};
use crate::Theta;

pub use gpd::{fit_gpd, gpd_quantile, GpdFit, GpdMethod};

/// Default center when no MLE is available.
pub const DEFAULT_CENTER: [f64; 3] = [0.1, 0.1, 0.1];

/// `floor(min(0.2 S, 3 sqrt(S)))`.
pub fn tail_size(s: usize) -> usize {
    (0.2 * s as f64).min(3.0 * (s as f64).sqrt()).floor() as usize
}

/// `min(1 - 1 / log10(S), 0.7)`.
pub fn khat_threshold(s: usize) -> f64 {
    (1.0 - 1.0 / (s as f64).log10()).min(0.7)
}

/// `log p(theta | x) - log g(theta | center)`; `-inf` outside the support.
pub fn log_raw_ratio(
    theta: &Theta,
    proposal: &GaussianProposal,
    spec: &ModelSpec,
    prior: &PriorSpec,
    x: &CountSeries,
    lambda0: f64,
) -> f64 {
    let lp = log_posterior(spec, prior, &Params::new(theta[0], theta[1], theta[2], lambda0), x);
    if lp == f64::NEG_INFINITY {
        lp
    } else {
        lp - proposal.logpdf(theta)
    }
}

/// `exp` of [`log_raw_ratio`]; only meaningful when the log ratio is
/// moderate, see [`PsaisResult::log_ratios`].
pub fn raw_ratio(
    theta: &Theta,
    proposal: &GaussianProposal,
    spec: &ModelSpec,
    prior: &PriorSpec,
    x: &CountSeries,
    lambda0: f64,
) -> f64 {
    log_raw_ratio(theta, proposal, spec, prior, x, lambda0).exp()
}

/// `candidate` if its log posterior strictly exceeds the center's.
pub fn uphill_update(
    center: &Theta,
    candidate: &Theta,
    spec: &ModelSpec,
    prior: &PriorSpec,
    x: &CountSeries,
    lambda0: f64,
) -> Theta {
    let lp = |t: &Theta| log_posterior(spec, prior, &Params::new(t[0], t[1], t[2], lambda0), x);
    if lp(candidate) > lp(center) {
        *candidate
    } else {
        *center
    }
}

/// Output of [`pareto_smooth`].
#[derive(Debug, Clone, PartialEq)]
pub struct Smoothed {
    /// Ratios with the top `M` replaced, in the input order (unnormalized).
    pub ratios: Vec<f64>,
    /// `None` when the tail was degenerate and nothing was replaced.
    pub gpd: Option<GpdFit>,
}

impl Smoothed {
    pub fn tail_degenerate(&self) -> bool {
        self.gpd.is_none()
    }
}

/// Replaces the `M` largest ratios by `min(F^-1((z - 1/2) / M), max ratio)`,
/// `z = 1..M`, with the GPD fitted to their excesses over `r_(S-M)`.
pub fn pareto_smooth(ratios: &[f64], method: GpdMethod) -> Result<Smoothed> {
    let s = ratios.len();
    if s < 25 {
        return Err(Error::InvalidParameter(format!("smoothing needs at least 25 ratios, got {s}")));
    }
    if ratios.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
        return Err(Error::InvalidParameter("ratios must be finite and non-negative".into()));
    }
    let m = tail_size(s);
    let mut order: Vec<usize> = (0..s).collect();
    order.sort_by(|&a, &b| ratios[a].total_cmp(&ratios[b]));
    let u = ratios[order[s - m - 1]];
    let max = ratios[order[s - 1]];
    let exceed: Vec<f64> = order[s - m..].iter().map(|&i| ratios[i] - u).collect();

    let fit = match fit_gpd(&exceed, u, method) {
        Ok(f) => f,
        Err(Error::DegenerateTail(msg)) => {
            log::warn!("tail not smoothed: {msg}");
            return Ok(Smoothed {
                ratios: ratios.to_vec(),
                gpd: None,
            });
        }
        Err(e) => return Err(e),
    };
    let mut out = ratios.to_vec();
    for (z, &i) in order[s - m..].iter().enumerate() {
        let p = (z as f64 + 0.5) / m as f64;
        out[i] = fit.quantile(p).min(max);
    }
    Ok(Smoothed {
        ratios: out,
        gpd: Some(fit),
    })
}

/// Pareto-smoothed self-normalized estimate from log importance ratios.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedEstimate {
    /// `exp(log_ratio - max log_ratio)`.
    pub raw_ratios: Vec<f64>,
    pub log_ratio_scale: f64,
    pub weights: Vec<f64>,
    pub gpd: Option<GpdFit>,
    pub estimate: Vec<f64>,
    /// Delta-method standard error `sqrt(sum w^2 (h - est)^2)`.
    pub std_error: Vec<f64>,
    /// `1 / sum w^2`.
    pub ess: f64,
}

/// Smooths the ratios and forms `sum w_s h_s` for each component of `values`.
pub fn smoothed_estimate(log_ratios: &[f64], values: &[Vec<f64>], method: GpdMethod) -> Result<SmoothedEstimate> {
    if log_ratios.len() != values.len() || values.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "{} ratios for {} values",
            log_ratios.len(),
            values.len()
        )));
    }
    let scale = log_ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !scale.is_finite() {
        return Err(Error::DegenerateTail("every draw fell outside the support".into()));
    }
    let raw: Vec<f64> = log_ratios.iter().map(|l| (l - scale).exp()).collect();
    let smoothed = pareto_smooth(&raw, method)?;
    let total: f64 = smoothed.ratios.iter().sum();
    let weights: Vec<f64> = smoothed.ratios.iter().map(|r| r / total).collect();

    let dim = values[0].len();
    let mut estimate = vec![0.0; dim];
    for (w, v) in weights.iter().zip(values) {
        for j in 0..dim {
            estimate[j] += w * v[j];
        }
    }
    let std_error = (0..dim)
        .map(|j| {
            weights
                .iter()
                .zip(values)
                .map(|(w, v)| (w * (v[j] - estimate[j])).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    let ess = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
    Ok(SmoothedEstimate {
        raw_ratios: raw,
        log_ratio_scale: scale,
        weights,
        gpd: smoothed.gpd,
        estimate,
        std_error,
        ess,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsaisConfig {
    /// Number of draws `S`.
    pub draws: usize,
    pub seed: u64,
    pub chain_index: u64,
    pub nb_tolerance: f64,
    /// Fixed `lambda0`; the MLE value when `None`.
    pub lambda0: Option<f64>,
    /// Initial center; the MLE when `None`, falling back to
    /// [`DEFAULT_CENTER`] if the MLE fails.
    pub center: Option<Theta>,
    /// Store the center rather than the draw whenever the draw does not move
    /// the center uphill.
    pub overwrite_draws: bool,
    pub gpd_method: GpdMethod,
    pub design: LogLinearDesign,
}

impl Default for PsaisConfig {
    fn default() -> Self {
        Self {
            draws: 5_000,
            seed: 0,
            chain_index: 0,
            nb_tolerance: DEFAULT_TOLERANCE,
            lambda0: None,
            center: None,
            overwrite_draws: false,
            gpd_method: GpdMethod::default(),
            design: LogLinearDesign::PlugIn,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsaisResult {
    /// Values entering the estimator.
    pub draws: Vec<Theta>,
    /// Center whose proposal generated each draw.
    pub centers: Vec<Theta>,
    /// `log r_s`; `-inf` for draws outside the support.
    pub log_ratios: Vec<f64>,
    /// `exp(log r_s - max_s log r_s)`; the common factor cancels in the
    /// normalized weights.
    pub raw_ratios: Vec<f64>,
    pub log_ratio_scale: f64,
    pub smoothed_weights: Vec<f64>,
    pub gpd: Option<GpdFit>,
    pub khat_threshold: f64,
    pub khat_flag: bool,
    pub estimate: Vec<f64>,
    /// Delta-method standard error of each estimate component.
    pub std_error: Vec<f64>,
    /// `1 / sum w_s^2`.
    pub ess: f64,
    pub lambda0: f64,
    pub lambda0_draws: Vec<f64>,
    /// Draws generated from the isotropic fallback proposal.
    pub fallback_draws: usize,
}

impl PsaisResult {
    pub fn khat(&self) -> Option<f64> {
        self.gpd.map(|g| g.k_hat)
    }
}

/// Center and `lambda0` from the MLE when not configured.
fn resolve_start(spec: &ModelSpec, x: &CountSeries, cfg: &PsaisConfig) -> (Theta, f64) {
    if let (Some(c), Some(l0)) = (cfg.center, cfg.lambda0) {
        return (c, l0);
    }
    let init = Params::new(DEFAULT_CENTER[0], DEFAULT_CENTER[1], DEFAULT_CENTER[2], 1.0);
    let mle = match mle_fit(spec, x, &init) {
        Ok(fit) => Some(fit.params),
        Err(Error::NoConvergence { best_point, .. }) => {
            Some(Params::new(best_point[0], best_point[1], best_point[2], best_point[3]))
        }
        Err(e) => {
            log::warn!("MLE for the PSAIS start failed: {e}");
            None
        }
    };
    let center = cfg.center.unwrap_or_else(|| match mle {
        Some(p) if is_stationary(spec, &p.theta()) => p.theta(),
        _ => Theta::from(DEFAULT_CENTER),
    });
    let lambda0 = cfg.lambda0.unwrap_or_else(|| mle.map_or(1.0, |p| p.lambda0));
    (center, lambda0)
}

fn kernel_at(factory: &ProposalFactory, at: &Params) -> Result<(GaussianProposal, bool)> {
    match factory.build(at) {
        Ok(b) => Ok((b.proposal, false)),
        Err(Error::IllConditioned { .. }) => Ok((GaussianProposal::spherical(at.theta(), FALLBACK_SCALE), true)),
        Err(e) => Err(e),
    }
}

/// Runs PSAIS and estimates `E[h(theta) | x]` componentwise.
pub fn psais_run<H>(
    spec: &ModelSpec,
    prior: &PriorSpec,
    config: &PsaisConfig,
    x: &CountSeries,
    h: H,
) -> Result<PsaisResult>
where
    H: Fn(&Theta) -> Vec<f64>,
{
    let s_total = config.draws;
    if s_total < 25 {
        return Err(Error::InvalidParameter(format!("PSAIS needs at least 25 draws, got {s_total}")));
    }
    if !(config.nb_tolerance > 0.0 && config.nb_tolerance < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "nb_tolerance must lie in (0, 1), got {}",
            config.nb_tolerance
        )));
    }
    let (mut center, lambda0) = resolve_start(spec, x, config);
    if !is_stationary(spec, &center) {
        return Err(Error::NonStationary(format!("PSAIS center {:?}", center.as_slice())));
    }
    if !(lambda0 > 0.0) {
        return Err(Error::InvalidParameter(format!("lambda0 must be positive, got {lambda0}")));
    }
    let mut factory = ProposalFactory::new(*spec, x, &prior.theta, config.nb_tolerance);
    factory.design = config.design;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(config.chain_index);

    let params_at = |t: &Theta| Params::new(t[0], t[1], t[2], lambda0);
    let mut center_lp = log_posterior(spec, prior, &params_at(&center), x);
    let (mut proposal, mut fallback) = kernel_at(&factory, &params_at(&center))?;

    let mut draws = Vec::with_capacity(s_total);
    let mut centers = Vec::with_capacity(s_total);
    let mut log_ratios = Vec::with_capacity(s_total);
    let mut fallback_draws = 0;
    for _ in 0..s_total {
        let theta = proposal.sample(&mut rng);
        centers.push(center);
        if fallback {
            fallback_draws += 1;
        }
        let lp = log_posterior(spec, prior, &params_at(&theta), x);
        log_ratios.push(if lp == f64::NEG_INFINITY { lp } else { lp - proposal.logpdf(&theta) });
        if lp > center_lp {
            center = theta;
            center_lp = lp;
            (proposal, fallback) = kernel_at(&factory, &params_at(&center))?;
            draws.push(theta);
        } else if config.overwrite_draws {
            draws.push(center);
        } else {
            draws.push(theta);
        }
    }

    let values: Vec<Vec<f64>> = draws.iter().map(&h).collect();
    let est = smoothed_estimate(&log_ratios, &values, config.gpd_method)?;
    let threshold = khat_threshold(s_total);
    Ok(PsaisResult {
        draws,
        centers,
        log_ratios,
        raw_ratios: est.raw_ratios,
        log_ratio_scale: est.log_ratio_scale,
        smoothed_weights: est.weights,
        khat_flag: est.gpd.is_some_and(|g| g.k_hat > threshold),
        gpd: est.gpd,
        khat_threshold: threshold,
        estimate: est.estimate,
        std_error: est.std_error,
        ess: est.ess,
        lambda0,
        lambda0_draws: vec![lambda0; s_total],
        fallback_draws,
    })
}

/// Identity functional: the posterior mean of `theta`.
pub fn identity(theta: &Theta) -> Vec<f64> {
    theta.iter().copied().collect()
}
