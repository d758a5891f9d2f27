use ingarch_core::mh::{log_posterior, run_chain, MhConfig, MhSampler, PriorSpec, UpdateMode};
use ingarch_core::model::{check_stationarity, is_stationary, log_likelihood, simulate};
use ingarch_core::proposal::{GaussianPrior, ProposalFactory};
use ingarch_core::{CountSeries, ModelSpec, Params, Theta};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn a1() -> (ModelSpec, PriorSpec, CountSeries) {
    let spec = ModelSpec::LogLinear;
    let prior = PriorSpec::new(GaussianPrior::diagonal([0.0; 3], [1.0; 3]).unwrap(), 1.0, 0.1).unwrap();
    let x = simulate(&spec, &Params::new(0.3, 0.2, 0.6, 3.0), 400, 77).unwrap();
    (spec, prior, x)
}

fn mean_and_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

#[test]
fn acceptance_ratio_reassembles_from_independent_terms() {
    let (spec, prior, x) = a1();
    let config = MhConfig::default();
    let sampler = MhSampler::new(spec, &prior, config.clone(), &x).unwrap();
    let current = Params::new(0.35, 0.15, 0.55, 2.5);
    let candidate = Theta::new(0.3, 0.22, 0.58);

    let factory = ProposalFactory::new(spec, &x, &prior.theta, config.nb_tolerance);
    let forward = factory.build(&current).unwrap().proposal;
    let reverse = factory.build(&current.with_theta(&candidate)).unwrap().proposal;
    let expected = log_likelihood(&spec, &current.with_theta(&candidate), &x).unwrap()
        - log_likelihood(&spec, &current, &x).unwrap()
        + reverse.logpdf(&current.theta())
        - forward.logpdf(&candidate)
        + prior.theta.log_density(&candidate)
        - prior.theta.log_density(&current.theta());

    let terms = sampler.acceptance_terms(&current, &candidate).unwrap();
    assert!((terms.log_ratio() - expected).abs() < 1e-9, "{} vs {expected}", terms.log_ratio());

    let mut literal = terms;
    literal.include_prior = false;
    let expected_literal =
        expected - prior.theta.log_density(&candidate) + prior.theta.log_density(&current.theta());
    assert!((literal.log_ratio() - expected_literal).abs() < 1e-9);
}

#[test]
fn non_stationary_candidate_is_never_accepted() {
    let (spec, prior, x) = a1();
    let sampler = MhSampler::new(spec, &prior, MhConfig::default(), &x).unwrap();
    let current = Params::new(0.3, 0.2, 0.6, 3.0);
    let terms = sampler.acceptance_terms(&current, &Theta::new(0.3, 0.2, 1.2)).unwrap();
    assert_eq!(terms.probability(), 0.0);
}

#[test]
fn proposal_without_data_is_the_prior() {
    let prior = GaussianPrior::diagonal([0.2, 0.1, 0.3], [0.04, 0.09, 0.01]).unwrap();
    let x = CountSeries::initial_only(3);
    for spec in [ModelSpec::LogLinear, ModelSpec::Softplus { scale: 1.0 }] {
        let g = ProposalFactory::new(spec, &x, &prior, 0.01)
            .build(&Params::new(0.5, 0.2, 0.3, 1.0))
            .unwrap()
            .proposal;
        assert!((g.mean() - prior.mean()).norm() < 1e-12);
        assert!((g.covariance() - prior.cov()).norm() < 1e-12);
    }
}

#[test]
fn prior_only_chain_matches_rejection_sampling() {
    let spec = ModelSpec::LogLinear;
    let b = [0.2, 0.4, 0.3];
    let sd = [0.3, 0.4, 0.5];
    let prior = PriorSpec::new(
        GaussianPrior::diagonal(b, sd.map(|s| s * s)).unwrap(),
        2.0,
        1.0,
    )
    .unwrap();
    let x = CountSeries::initial_only(2);
    let config = MhConfig {
        iterations: 60_000,
        burn_in: 1_000,
        seed: 3,
        lambda0_proposal: Some((2.0, 1.0)),
        ..MhConfig::default()
    };
    let chain = run_chain(&spec, &prior, &config, &x, &Params::new(0.1, 0.1, 0.1, 1.0)).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut accepted: Vec<[f64; 3]> = Vec::new();
    while accepted.len() < 60_000 {
        let t: [f64; 3] = std::array::from_fn(|k| b[k] + sd[k] * rng.sample::<f64, _>(StandardNormal));
        if is_stationary(&spec, &Theta::from(t)) {
            accepted.push(t);
        }
    }
    for k in 0..3 {
        let (m_chain, se_chain) = mean_and_se(&chain.kept_column(k));
        let (m_ref, se_ref) = mean_and_se(&accepted.iter().map(|t| t[k]).collect::<Vec<_>>());
        let z = (m_chain - m_ref) / (se_chain.powi(2) + se_ref.powi(2)).sqrt();
        assert!(z.abs() < 4.0, "component {k}: {m_chain} vs {m_ref}");
    }
    let (m_l0, se_l0) = mean_and_se(&chain.kept_column(3));
    assert!((m_l0 - 2.0).abs() < 4.0 * se_l0 + 0.02, "lambda0 mean {m_l0}");
}

#[test]
fn chains_are_reproducible_per_seed_and_stream() {
    let (spec, prior, x) = a1();
    let config = MhConfig {
        iterations: 400,
        burn_in: 100,
        seed: 9,
        ..MhConfig::default()
    };
    let init = Params::new(0.1, 0.1, 0.1, 1.0);
    let first = run_chain(&spec, &prior, &config, &x, &init).unwrap();
    let second = run_chain(&spec, &prior, &config, &x, &init).unwrap();
    assert_eq!(first.draws, second.draws);
    let other = run_chain(&spec, &prior, &MhConfig { chain_index: 1, ..config }, &x, &init).unwrap();
    assert_ne!(first.draws, other.draws);
}

#[test]
fn stored_draws_stay_in_the_support() {
    let (spec, prior, x) = a1();
    for mode in [UpdateMode::Joint, UpdateMode::Blocked] {
        let config = MhConfig {
            iterations: 1_500,
            burn_in: 500,
            seed: 1,
            mode,
            ..MhConfig::default()
        };
        let chain = run_chain(&spec, &prior, &config, &x, &Params::new(0.1, 0.1, 0.1, 1.0)).unwrap();
        for d in &chain.draws {
            let p = Params::new(d[0], d[1], d[2], d[3]);
            assert!(check_stationarity(&spec, &p) && p.lambda0 > 0.0);
        }
    }
}

#[test]
fn state_dependent_proposal_beats_random_walk_acceptance() {
    let (spec, prior, x) = a1();
    let iterations = 4_000;
    let config = MhConfig {
        iterations,
        burn_in: 1_000,
        seed: 5,
        update_lambda0: false,
        ..MhConfig::default()
    };
    let init = Params::new(0.3, 0.2, 0.6, 3.0);
    let chain = run_chain(&spec, &prior, &config, &x, &init).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut state = init;
    let mut lp = log_posterior(&spec, &prior, &state, &x);
    let mut accepted = 0usize;
    for _ in 0..iterations {
        let step = Theta::from_fn(|_, _| 0.05 * rng.sample::<f64, _>(StandardNormal));
        let cand = state.with_theta(&(state.theta() + step));
        let lp_cand = log_posterior(&spec, &prior, &cand, &x);
        if rng.random::<f64>().ln() < lp_cand - lp {
            state = cand;
            lp = lp_cand;
            accepted += 1;
        }
    }
    let rw_rate = accepted as f64 / iterations as f64;
    assert!(
        chain.theta_acceptance_rate() > rw_rate,
        "{} vs {rw_rate}",
        chain.theta_acceptance_rate()
    );
}
