//! Metropolis-Hastings within Gibbs for `(alpha0, alpha1, beta1, lambda0)`.
//!
//! Each iteration updates `theta` with the state-dependent Gaussian proposal
//! (jointly, or in the blocks `alpha0` / `(alpha1, beta1)`), corrected with the
//! exact Poisson likelihood, and then `lambda0` with an independence Gamma
//! proposal.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};
use crate::model::{is_stationary, log_likelihood, CountSeries, ModelSpec, Params};
use crate::nb::DEFAULT_TOLERANCE;
use crate::proposal::{GaussianPrior, GaussianProposal, LogLinearDesign, ProposalFactory};
use crate::special::gamma_ln_pdf;
use crate::Theta;

/// Scale of the isotropic proposal used when the Gaussian one is ill-conditioned.
pub const FALLBACK_SCALE: f64 = 0.05;

/// Priors: truncated `N(b, B)` on `theta`, `Gamma(shape, rate)` on `lambda0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorSpec {
    pub theta: GaussianPrior,
    pub lambda0_shape: f64,
    pub lambda0_rate: f64,
}

impl PriorSpec {
    pub fn new(theta: GaussianPrior, lambda0_shape: f64, lambda0_rate: f64) -> Result<Self> {
        if !(lambda0_shape > 0.0 && lambda0_rate > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda0 prior needs positive shape and rate, got ({lambda0_shape}, {lambda0_rate})"
            )));
        }
        Ok(Self {
            theta,
            lambda0_shape,
            lambda0_rate,
        })
    }

    pub fn log_lambda0_prior(&self, lambda0: f64) -> f64 {
        gamma_ln_pdf(lambda0, self.lambda0_shape, self.lambda0_rate)
    }
}

/// Unnormalized log posterior; `-inf` outside the support.
pub fn log_posterior(spec: &ModelSpec, prior: &PriorSpec, params: &Params, x: &CountSeries) -> f64 {
    if !is_stationary(spec, &params.theta()) || !(params.lambda0 > 0.0) {
        return f64::NEG_INFINITY;
    }
    match log_likelihood(spec, params, x) {
        Ok(ll) => ll + prior.theta.log_density(&params.theta()) + prior.log_lambda0_prior(params.lambda0),
        Err(_) => f64::NEG_INFINITY,
    }
}

/// Log-likelihood with overflow mapped to `-inf`.
fn log_lik_or_neg_inf(spec: &ModelSpec, params: &Params, x: &CountSeries) -> f64 {
    log_likelihood(spec, params, x).unwrap_or(f64::NEG_INFINITY)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UpdateMode {
    /// Propose all of `theta` at once.
    #[default]
    Joint,
    /// `alpha0`, then `(alpha1, beta1)`, each from the conditional of the
    /// same Gaussian proposal.
    Blocked,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MhConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
    /// Independent stream index for parallel chains sharing a seed.
    pub chain_index: u64,
    pub nb_tolerance: f64,
    /// `(shape, rate)` of the `lambda0` proposal; defaults to
    /// `(2, 2 / mean(x))`.
    pub lambda0_proposal: Option<(f64, f64)>,
    pub include_prior_in_ratio: bool,
    pub mode: UpdateMode,
    /// Freeze the NB shapes at the state reached after this many iterations.
    pub freeze_r_after: Option<usize>,
    pub design: LogLinearDesign,
    /// When false `lambda0` stays at its initial value.
    pub update_lambda0: bool,
    /// Leading iterations in which a `theta` candidate is also accepted when
    /// it strictly raises the log posterior. Must not exceed `burn_in`; the
    /// chain is a plain MH chain afterwards.
    pub warmup: Option<usize>,
}

impl Default for MhConfig {
    fn default() -> Self {
        Self {
            iterations: 10_000,
            burn_in: 5_000,
            seed: 0,
            chain_index: 0,
            nb_tolerance: DEFAULT_TOLERANCE,
            lambda0_proposal: None,
            include_prior_in_ratio: true,
            mode: UpdateMode::Joint,
            freeze_r_after: None,
            design: LogLinearDesign::PlugIn,
            update_lambda0: true,
            warmup: None,
        }
    }
}

impl MhConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.burn_in >= self.iterations {
            return Err(Error::InvalidParameter(format!(
                "need burn_in < iterations, got {} and {}",
                self.burn_in, self.iterations
            )));
        }
        if !(self.nb_tolerance > 0.0 && self.nb_tolerance < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "nb_tolerance must lie in (0, 1), got {}",
                self.nb_tolerance
            )));
        }
        if self.warmup.is_some_and(|w| w > self.burn_in) {
            return Err(Error::InvalidParameter(format!(
                "warmup ({}) must not exceed burn_in ({})",
                self.warmup.unwrap_or(0),
                self.burn_in
            )));
        }
        if let Some((a, b)) = self.lambda0_proposal {
            if !(a > 0.0 && b > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "lambda0 proposal needs positive shape and rate, got ({a}, {b})"
                )));
            }
        }
        Ok(())
    }

    /// Warm-up length; half the burn-in unless set.
    pub fn warmup_len(&self) -> usize {
        self.warmup.unwrap_or(self.burn_in / 2)
    }

    fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.chain_index);
        rng
    }
}

/// Default `lambda0` proposal `Gamma(2, 2 / mean)`, moment-matched to the
/// count mean.
pub fn default_lambda0_proposal(x: &CountSeries) -> (f64, f64) {
    let mean = x.mean().max(0.1);
    (2.0, 2.0 / mean)
}

/// Stored output of [`run_chain`].
#[derive(Debug, Clone, PartialEq)]
pub struct ChainResult {
    /// Rows `(alpha0, alpha1, beta1, lambda0)`, one per iteration.
    pub draws: Vec<[f64; 4]>,
    pub accepted_theta: Vec<bool>,
    pub accepted_lambda0: Vec<bool>,
    /// Mean `r_t` of the proposal used at each iteration.
    pub mean_r: Vec<f64>,
    /// Iterations at which the isotropic fallback proposal was used.
    pub fallback_iterations: Vec<usize>,
    pub seed: u64,
    pub chain_index: u64,
    pub burn_in: usize,
}

impl ChainResult {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    /// Column `j` over all iterations.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.draws.iter().map(|d| d[j]).collect()
    }

    /// Column `j` after burn-in.
    pub fn kept_column(&self, j: usize) -> Vec<f64> {
        self.draws[self.burn_in..].iter().map(|d| d[j]).collect()
    }

    pub fn kept(&self) -> &[[f64; 4]] {
        &self.draws[self.burn_in..]
    }

    /// Post-burn-in posterior mean of `(alpha0, alpha1, beta1, lambda0)`.
    pub fn posterior_mean(&self) -> [f64; 4] {
        let kept = self.kept();
        let mut m = [0.0; 4];
        for d in kept {
            for j in 0..4 {
                m[j] += d[j];
            }
        }
        m.map(|v| v / kept.len() as f64)
    }

    pub fn theta_acceptance_rate(&self) -> f64 {
        rate(&self.accepted_theta[self.burn_in..])
    }

    pub fn lambda0_acceptance_rate(&self) -> f64 {
        rate(&self.accepted_lambda0[self.burn_in..])
    }
}

fn rate(flags: &[bool]) -> f64 {
    if flags.is_empty() {
        0.0
    } else {
        flags.iter().filter(|&&a| a).count() as f64 / flags.len() as f64
    }
}

/// Proposal kernel attached to one state.
#[derive(Debug, Clone)]
pub struct Kernel {
    pub proposal: GaussianProposal,
    pub mean_r: f64,
    pub fallback: bool,
}

/// The four log terms of a `theta` acceptance ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcceptanceTerms {
    pub log_lik_current: f64,
    pub log_lik_candidate: f64,
    /// `log g(candidate | current)`.
    pub log_forward: f64,
    /// `log g(current | candidate)`.
    pub log_reverse: f64,
    pub log_prior_current: f64,
    pub log_prior_candidate: f64,
    pub include_prior: bool,
}

impl AcceptanceTerms {
    pub fn log_ratio(&self) -> f64 {
        if self.log_lik_candidate == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        let mut r = self.log_lik_candidate - self.log_lik_current + self.log_reverse - self.log_forward;
        if self.include_prior {
            r += self.log_prior_candidate - self.log_prior_current;
        }
        r
    }

    /// Strict increase of the log posterior (likelihood plus prior).
    pub fn is_uphill(&self) -> bool {
        self.log_lik_candidate + self.log_prior_candidate > self.log_lik_current + self.log_prior_current
    }

    /// `min(1, exp(log_ratio))`.
    pub fn probability(&self) -> f64 {
        self.log_ratio().min(0.0).exp()
    }
}

/// Result of one `theta` update.
#[derive(Debug, Clone)]
pub struct ThetaStep {
    pub state: Params,
    pub accepted: bool,
    /// Forward proposal built at the pre-step state.
    pub proposal_used: GaussianProposal,
    pub used_fallback: bool,
}

/// Stateful sampler over one dataset; caches the kernel and likelihood of
/// the current state so each iteration builds at most one new proposal.
pub struct MhSampler<'a> {
    spec: ModelSpec,
    prior: &'a PriorSpec,
    config: MhConfig,
    x: &'a CountSeries,
    factory: ProposalFactory<'a>,
    lambda0_proposal: (f64, f64),
    cache: Option<(Params, Kernel, f64)>,
    warm: bool,
}

impl<'a> MhSampler<'a> {
    pub fn new(spec: ModelSpec, prior: &'a PriorSpec, config: MhConfig, x: &'a CountSeries) -> Result<Self> {
        config.validate()?;
        let mut factory = ProposalFactory::new(spec, x, &prior.theta, config.nb_tolerance);
        factory.design = config.design;
        let lambda0_proposal = config.lambda0_proposal.unwrap_or_else(|| default_lambda0_proposal(x));
        Ok(Self {
            spec,
            prior,
            config,
            x,
            factory,
            lambda0_proposal,
            cache: None,
            warm: false,
        })
    }

    pub fn factory(&self) -> &ProposalFactory<'a> {
        &self.factory
    }

    /// Proposal kernel at `state`, falling back to an isotropic Gaussian when
    /// the state-dependent one is ill-conditioned.
    pub fn kernel(&self, state: &Params) -> Result<Kernel> {
        match self.factory.build(state) {
            Ok(built) => Ok(Kernel {
                mean_r: built.schedule.mean_r(),
                proposal: built.proposal,
                fallback: false,
            }),
            Err(Error::IllConditioned { condition }) => {
                log::debug!("ill-conditioned proposal (condition {condition:.3e}); using isotropic fallback");
                Ok(Kernel {
                    proposal: GaussianProposal::spherical(state.theta(), FALLBACK_SCALE),
                    mean_r: f64::NAN,
                    fallback: true,
                })
            }
            Err(e) => Err(e),
        }
    }

    fn current(&mut self, state: &Params) -> Result<(Kernel, f64)> {
        if let Some((s, k, ll)) = &self.cache {
            if s == state {
                return Ok((k.clone(), *ll));
            }
        }
        let kernel = self.kernel(state)?;
        let ll = log_lik_or_neg_inf(&self.spec, state, self.x);
        self.cache = Some((*state, kernel.clone(), ll));
        Ok((kernel, ll))
    }

    fn log_prior_theta(&self, theta: &Theta) -> f64 {
        self.prior.theta.log_density(theta)
    }

    /// All terms of the acceptance ratio for moving `current -> candidate`
    /// (joint update), computed from scratch.
    pub fn acceptance_terms(&self, current: &Params, candidate: &Theta) -> Result<AcceptanceTerms> {
        let cand = current.with_theta(candidate);
        let forward = self.kernel(current)?;
        let log_lik_candidate = if is_stationary(&self.spec, candidate) {
            log_lik_or_neg_inf(&self.spec, &cand, self.x)
        } else {
            f64::NEG_INFINITY
        };
        let log_reverse = if log_lik_candidate.is_finite() {
            self.kernel(&cand)?.proposal.logpdf(&current.theta())
        } else {
            f64::NEG_INFINITY
        };
        Ok(AcceptanceTerms {
            log_lik_current: log_lik_or_neg_inf(&self.spec, current, self.x),
            log_lik_candidate,
            log_forward: forward.proposal.logpdf(candidate),
            log_reverse,
            log_prior_current: self.log_prior_theta(&current.theta()),
            log_prior_candidate: self.log_prior_theta(candidate),
            include_prior: self.config.include_prior_in_ratio,
        })
    }

    /// One `theta` update from `state`.
    pub fn theta_step<R: Rng + ?Sized>(&mut self, state: &Params, rng: &mut R) -> Result<ThetaStep> {
        if !is_stationary(&self.spec, &state.theta()) {
            return Err(Error::NonStationary(format!("{:?}", state.theta())));
        }
        match self.config.mode {
            UpdateMode::Joint => self.joint_step(state, rng),
            UpdateMode::Blocked => {
                let first = self.block_step(state, &[0], rng)?;
                let second = self.block_step(&first.state, &[1, 2], rng)?;
                Ok(ThetaStep {
                    state: second.state,
                    accepted: first.accepted || second.accepted,
                    proposal_used: first.proposal_used,
                    used_fallback: first.used_fallback || second.used_fallback,
                })
            }
        }
    }

    fn joint_step<R: Rng + ?Sized>(&mut self, state: &Params, rng: &mut R) -> Result<ThetaStep> {
        let (kernel, ll_cur) = self.current(state)?;
        let candidate = kernel.proposal.sample(rng);
        let reject = ThetaStep {
            state: *state,
            accepted: false,
            proposal_used: kernel.proposal.clone(),
            used_fallback: kernel.fallback,
        };
        if !is_stationary(&self.spec, &candidate) {
            return Ok(reject);
        }
        let cand = state.with_theta(&candidate);
        let ll_cand = log_lik_or_neg_inf(&self.spec, &cand, self.x);
        if !ll_cand.is_finite() {
            return Ok(reject);
        }
        let reverse = self.kernel(&cand)?;
        let terms = AcceptanceTerms {
            log_lik_current: ll_cur,
            log_lik_candidate: ll_cand,
            log_forward: kernel.proposal.logpdf(&candidate),
            log_reverse: reverse.proposal.logpdf(&state.theta()),
            log_prior_current: self.log_prior_theta(&state.theta()),
            log_prior_candidate: self.log_prior_theta(&candidate),
            include_prior: self.config.include_prior_in_ratio,
        };
        if accept(terms.log_ratio(), rng) || (self.warm && terms.is_uphill()) {
            self.cache = Some((cand, reverse, ll_cand));
            Ok(ThetaStep {
                state: cand,
                accepted: true,
                proposal_used: kernel.proposal,
                used_fallback: kernel.fallback,
            })
        } else {
            Ok(reject)
        }
    }

    fn block_step<R: Rng + ?Sized>(&mut self, state: &Params, block: &[usize], rng: &mut R) -> Result<ThetaStep> {
        let (kernel, ll_cur) = self.current(state)?;
        let theta = state.theta();
        let forward = ConditionalGaussian::new(&kernel.proposal, block, &theta);
        let mut candidate = theta;
        let block_draw = forward.sample(rng);
        for (k, &i) in block.iter().enumerate() {
            candidate[i] = block_draw[k];
        }
        let reject = ThetaStep {
            state: *state,
            accepted: false,
            proposal_used: kernel.proposal.clone(),
            used_fallback: kernel.fallback,
        };
        if !is_stationary(&self.spec, &candidate) {
            return Ok(reject);
        }
        let cand = state.with_theta(&candidate);
        let ll_cand = log_lik_or_neg_inf(&self.spec, &cand, self.x);
        if !ll_cand.is_finite() {
            return Ok(reject);
        }
        let reverse_kernel = self.kernel(&cand)?;
        let reverse = ConditionalGaussian::new(&reverse_kernel.proposal, block, &candidate);
        let current_block: Vec<f64> = block.iter().map(|&i| theta[i]).collect();
        let terms = AcceptanceTerms {
            log_lik_current: ll_cur,
            log_lik_candidate: ll_cand,
            log_forward: forward.logpdf(&block_draw),
            log_reverse: reverse.logpdf(&current_block),
            log_prior_current: self.log_prior_theta(&theta),
            log_prior_candidate: self.log_prior_theta(&candidate),
            include_prior: self.config.include_prior_in_ratio,
        };
        if accept(terms.log_ratio(), rng) || (self.warm && terms.is_uphill()) {
            self.cache = Some((cand, reverse_kernel, ll_cand));
            Ok(ThetaStep {
                state: cand,
                accepted: true,
                proposal_used: kernel.proposal,
                used_fallback: kernel.fallback,
            })
        } else {
            Ok(reject)
        }
    }

    /// Independence MH update of `lambda0` with a `Gamma(a1, b1)` proposal.
    pub fn lambda0_step<R: Rng + ?Sized>(&mut self, state: &Params, rng: &mut R) -> Result<(f64, bool)> {
        let (shape, rate) = self.lambda0_proposal;
        let gamma = Gamma::new(shape, 1.0 / rate).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let proposed: f64 = gamma.sample(rng);
        if !(proposed > 0.0 && proposed.is_finite()) {
            return Ok((state.lambda0, false));
        }
        let cand = state.with_lambda0(proposed);
        let ll_cur = match &self.cache {
            Some((s, _, ll)) if s == state => *ll,
            _ => log_lik_or_neg_inf(&self.spec, state, self.x),
        };
        let ll_cand = log_lik_or_neg_inf(&self.spec, &cand, self.x);
        let log_ratio = ll_cand - ll_cur + self.prior.log_lambda0_prior(proposed)
            - self.prior.log_lambda0_prior(state.lambda0)
            + gamma_ln_pdf(state.lambda0, shape, rate)
            - gamma_ln_pdf(proposed, shape, rate);
        if ll_cand.is_finite() && accept(log_ratio, rng) {
            Ok((proposed, true))
        } else {
            Ok((state.lambda0, false))
        }
    }

    /// Runs the full chain from `init`.
    pub fn run(&mut self, init: &Params) -> Result<ChainResult> {
        if !is_stationary(&self.spec, &init.theta()) {
            return Err(Error::NonStationary(format!(
                "initial value ({}, {}, {})",
                init.alpha0, init.alpha1, init.beta1
            )));
        }
        if !(init.lambda0 > 0.0) {
            return Err(Error::InvalidParameter("initial lambda0 must be positive".into()));
        }
        let n_iter = self.config.iterations;
        let mut rng = self.config.rng();
        let mut state = *init;
        let mut result = ChainResult {
            draws: Vec::with_capacity(n_iter),
            accepted_theta: Vec::with_capacity(n_iter),
            accepted_lambda0: Vec::with_capacity(n_iter),
            mean_r: Vec::with_capacity(n_iter),
            fallback_iterations: Vec::new(),
            seed: self.config.seed,
            chain_index: self.config.chain_index,
            burn_in: self.config.burn_in,
        };

        let warmup = self.config.warmup_len();
        for iter in 0..n_iter {
            self.warm = iter < warmup;
            if self.config.freeze_r_after == Some(iter) && self.factory.frozen_r.is_none() {
                let built = self.factory.build(&state)?;
                self.factory.frozen_r = Some(built.schedule.r);
                self.cache = None;
            }
            let (kernel, _) = self.current(&state)?;
            result.mean_r.push(kernel.mean_r);

            let step = self.theta_step(&state, &mut rng)?;
            if step.used_fallback {
                result.fallback_iterations.push(iter);
            }
            state = step.state;
            result.accepted_theta.push(step.accepted);

            let l0_accepted = if self.config.update_lambda0 {
                let (l0, acc) = self.lambda0_step(&state, &mut rng)?;
                state = state.with_lambda0(l0);
                acc
            } else {
                false
            };
            result.accepted_lambda0.push(l0_accepted);
            result.draws.push([state.alpha0, state.alpha1, state.beta1, state.lambda0]);
        }
        self.warm = false;
        Ok(result)
    }
}

#[inline]
fn accept<R: Rng + ?Sized>(log_ratio: f64, rng: &mut R) -> bool {
    if log_ratio >= 0.0 {
        // still consume a uniform so the stream does not depend on the branch
        let _ = rng.random::<f64>();
        true
    } else {
        rng.random::<f64>().ln() < log_ratio
    }
}

/// One `theta` update; builds a throwaway sampler.
pub fn mh_theta_step<R: Rng + ?Sized>(
    state: &Params,
    spec: &ModelSpec,
    prior: &PriorSpec,
    config: &MhConfig,
    x: &CountSeries,
    rng: &mut R,
) -> Result<ThetaStep> {
    MhSampler::new(*spec, prior, config.clone(), x)?.theta_step(state, rng)
}

/// One `lambda0` update; builds a throwaway sampler.
pub fn mh_lambda0_step<R: Rng + ?Sized>(
    state: &Params,
    spec: &ModelSpec,
    prior: &PriorSpec,
    config: &MhConfig,
    x: &CountSeries,
    rng: &mut R,
) -> Result<(f64, bool)> {
    MhSampler::new(*spec, prior, config.clone(), x)?.lambda0_step(state, rng)
}

pub fn run_chain(
    spec: &ModelSpec,
    prior: &PriorSpec,
    config: &MhConfig,
    x: &CountSeries,
    init: &Params,
) -> Result<ChainResult> {
    MhSampler::new(*spec, prior, config.clone(), x)?.run(init)
}

/// Conditional of a 3-dim Gaussian for the coordinates in `block` given the
/// remaining coordinates of `at`.
struct ConditionalGaussian {
    mean: DVector<f64>,
    precision: DMatrix<f64>,
    factor: DMatrix<f64>,
    log_norm: f64,
}

impl ConditionalGaussian {
    fn new(g: &GaussianProposal, block: &[usize], at: &Theta) -> Self {
        let rest: Vec<usize> = (0..3).filter(|i| !block.contains(i)).collect();
        let p = g.precision();
        let mu = g.mean();
        let k = block.len();
        // conditional precision P_AA, mean mu_A - P_AA^-1 P_AR (at_R - mu_R)
        let paa = DMatrix::from_fn(k, k, |i, j| p[(block[i], block[j])]);
        let shift = DVector::from_fn(k, |i, _| {
            rest.iter().map(|&r| p[(block[i], r)] * (at[r] - mu[r])).sum::<f64>()
        });
        let chol = paa.clone().cholesky().expect("principal block of an SPD matrix");
        let mean = DVector::from_fn(k, |i, _| mu[block[i]]) - chol.solve(&shift);
        let cov = chol.inverse();
        let factor = cov.cholesky().expect("inverse of SPD block").l();
        let log_det_cov: f64 = factor.diagonal().iter().map(|d| 2.0 * d.ln()).sum();
        Self {
            mean,
            precision: paa,
            factor,
            log_norm: -0.5 * (k as f64 * (2.0 * std::f64::consts::PI).ln() + log_det_cov),
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let z = DVector::from_fn(self.mean.len(), |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
        (&self.mean + &self.factor * z).iter().copied().collect()
    }

    fn logpdf(&self, v: &[f64]) -> f64 {
        let d = DVector::from_column_slice(v) - &self.mean;
        self.log_norm - 0.5 * d.dot(&(&self.precision * &d))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_prior() -> PriorSpec {
        PriorSpec::new(GaussianPrior::diagonal([0.0; 3], [1.0; 3]).unwrap(), 1.0, 0.1).unwrap()
    }

    #[test]
    fn log_posterior_outside_support() {
        let x = CountSeries::new(vec![1, 2, 3]).unwrap();
        let prior = flat_prior();
        assert_eq!(
            log_posterior(&ModelSpec::LogLinear, &prior, &Params::new(0.1, 0.5, 0.6, 1.0), &x),
            f64::NEG_INFINITY
        );
        assert_eq!(
            log_posterior(&ModelSpec::LogLinear, &prior, &Params::new(0.1, 0.2, 0.3, 0.0), &x),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn empty_data_posterior_is_prior() {
        let x = CountSeries::initial_only(2);
        let prior = flat_prior();
        let p = Params::new(0.1, 0.2, 0.3, 1.7);
        let lp = log_posterior(&ModelSpec::LogLinear, &prior, &p, &x);
        let expected = prior.theta.log_density(&p.theta()) + prior.log_lambda0_prior(1.7);
        assert!((lp - expected).abs() < 1e-14);
    }

    #[test]
    fn forced_identity_move_has_unit_ratio() {
        let x = crate::model::simulate(&ModelSpec::LogLinear, &Params::new(0.3, 0.2, 0.6, 3.0), 100, 1).unwrap();
        let prior = flat_prior();
        let sampler = MhSampler::new(ModelSpec::LogLinear, &prior, MhConfig::default(), &x).unwrap();
        let cur = Params::new(0.25, 0.25, 0.5, 2.0);
        let terms = sampler.acceptance_terms(&cur, &cur.theta()).unwrap();
        assert_eq!(terms.log_ratio(), 0.0);
        assert_eq!(terms.probability(), 1.0);
    }

    #[test]
    fn config_validation() {
        let bad = MhConfig {
            burn_in: 10,
            iterations: 10,
            ..MhConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = MhConfig {
            nb_tolerance: 1.5,
            ..MhConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn nonstationary_init_rejected() {
        let x = CountSeries::new(vec![1, 2, 3]).unwrap();
        let prior = flat_prior();
        let cfg = MhConfig {
            iterations: 10,
            burn_in: 2,
            ..MhConfig::default()
        };
        assert!(run_chain(&ModelSpec::LogLinear, &prior, &cfg, &x, &Params::new(0.1, 0.9, 0.5, 1.0)).is_err());
    }

    #[test]
    fn conditional_gaussian_matches_joint_ratio() {
        // log g(a | rest) differences equal joint log-density differences when
        // only the block coordinates move.
        let cov = nalgebra::Matrix3::new(0.5, 0.1, 0.05, 0.1, 0.3, -0.02, 0.05, -0.02, 0.2);
        let g = GaussianProposal::new(Theta::new(0.1, 0.2, 0.3), cov).unwrap();
        let at = Theta::new(0.0, 0.25, 0.35);
        let cond = ConditionalGaussian::new(&g, &[1, 2], &at);
        let a = [0.2, 0.4];
        let b = [0.1, 0.5];
        let joint_a = g.logpdf(&Theta::new(at[0], a[0], a[1]));
        let joint_b = g.logpdf(&Theta::new(at[0], b[0], b[1]));
        assert!(((cond.logpdf(&a) - cond.logpdf(&b)) - (joint_a - joint_b)).abs() < 1e-12);
    }
}
