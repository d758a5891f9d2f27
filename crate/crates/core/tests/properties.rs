use ingarch_core::inference::mle::{from_unconstrained, to_unconstrained};
use ingarch_core::model::{check_stationarity, intensity_path, log_likelihood, simulate};
use ingarch_core::polya_gamma::{pg_mean, pg_variance};
use ingarch_core::proposal::{GaussianPrior, ProposalFactory};
use ingarch_core::psais::{gpd_quantile, pareto_smooth, tail_size, GpdMethod};
use ingarch_core::{ModelSpec, Params};
use proptest::prelude::*;

fn spec_strategy() -> impl Strategy<Value = ModelSpec> {
    prop_oneof![
        Just(ModelSpec::LogLinear),
        (0.5f64..3.0).prop_map(|scale| ModelSpec::Softplus { scale }),
    ]
}

/// Stationary parameters for either link.
fn params_for(spec: ModelSpec) -> impl Strategy<Value = Params> {
    (0.05f64..0.8, 0.0f64..0.5, 0.0f64..1.0, 0.5f64..4.0).prop_map(move |(a0, a1, frac, l0)| {
        let b1 = frac * (0.95 - a1);
        match spec {
            ModelSpec::LogLinear => Params::new(a0, a1 - 0.25, b1, l0),
            ModelSpec::Softplus { .. } => Params::new(a0, a1, b1, l0),
        }
    })
}

fn spec_and_params() -> impl Strategy<Value = (ModelSpec, Params)> {
    spec_strategy().prop_flat_map(|s| (Just(s), params_for(s)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn simulated_paths_are_positive((spec, p) in spec_and_params(), seed in any::<u64>()) {
        prop_assume!(check_stationarity(&spec, &p));
        let x = simulate(&spec, &p, 50, seed).unwrap();
        prop_assert_eq!(x.n(), 50);
        let path = intensity_path(&spec, &p, &x).unwrap();
        prop_assert!(path.lambda.iter().all(|l| *l > 0.0 && l.is_finite()));
        prop_assert!(log_likelihood(&spec, &p, &x).unwrap().is_finite());
    }

    #[test]
    fn proposal_covariance_is_spd((spec, p) in spec_and_params(), seed in 0u64..1000) {
        prop_assume!(check_stationarity(&spec, &p));
        let x = simulate(&spec, &p, 60, seed).unwrap();
        let prior = GaussianPrior::diagonal([0.0; 3], [1.0; 3]).unwrap();
        if let Ok(built) = ProposalFactory::new(spec, &x, &prior, 0.01).build(&p) {
            let v = built.proposal.covariance();
            prop_assert!((v - v.transpose()).norm() <= 1e-10 * v.norm());
            prop_assert!(v.symmetric_eigenvalues().iter().all(|e| *e > 0.0));
            prop_assert!(built.schedule.r.iter().all(|r| *r > 0.0));
        }
    }

    #[test]
    fn unconstrained_round_trip((spec, p) in spec_and_params()) {
        prop_assume!(check_stationarity(&spec, &p));
        prop_assume!(p.beta1 > 1e-3 && p.alpha1.abs() > 1e-3);
        let back = from_unconstrained(&spec, &to_unconstrained(&spec, &p).unwrap());
        prop_assert!((back.theta() - p.theta()).norm() < 1e-9);
        prop_assert!((back.lambda0 - p.lambda0).abs() < 1e-9 * p.lambda0);
    }

    #[test]
    fn unconstrained_image_is_stationary(spec in spec_strategy(), u in prop::array::uniform4(-8.0f64..8.0)) {
        let p = from_unconstrained(&spec, &u);
        prop_assert!(check_stationarity(&spec, &p));
        prop_assert!(p.lambda0 > 0.0);
    }

    #[test]
    fn pg_moments_positive_and_even(b in 0.1f64..20.0, c in -30.0f64..30.0) {
        prop_assert!(pg_mean(b, c) > 0.0 && pg_variance(b, c) > 0.0);
        prop_assert_eq!(pg_mean(b, c), pg_mean(b, -c));
        prop_assert!(pg_mean(b, c.abs() + 0.5) < pg_mean(b, c.abs()));
    }

    #[test]
    fn smoothing_preserves_tail_order(ratios in prop::collection::vec(0.0f64..1e3, 30..400)) {
        let smoothed = pareto_smooth(&ratios, GpdMethod::ProfilePosterior).unwrap();
        let max = ratios.iter().copied().fold(0.0, f64::max);
        let m = tail_size(ratios.len());
        let mut idx: Vec<usize> = (0..ratios.len()).collect();
        idx.sort_by(|&a, &b| ratios[a].total_cmp(&ratios[b]));
        let tail: Vec<f64> = idx[ratios.len() - m..].iter().map(|&i| smoothed.ratios[i]).collect();
        prop_assert!(tail.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(smoothed.ratios.iter().all(|r| *r >= 0.0 && *r <= max));
        for &i in &idx[..ratios.len() - m] {
            prop_assert_eq!(smoothed.ratios[i], ratios[i]);
        }
    }

    #[test]
    fn gpd_quantiles_are_ordered(k in -0.5f64..1.5, sigma in 0.01f64..10.0, p in 0.0f64..0.99) {
        let q1 = gpd_quantile(p, k, sigma, 0.0);
        let q2 = gpd_quantile(p + 0.005, k, sigma, 0.0);
        prop_assert!(q1 >= 0.0 && q2 >= q1);
    }
}
