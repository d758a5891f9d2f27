use ingarch_core::polya_gamma::{pg_laplace_lhs_rhs, pg_mean, pg_variance, sample_pg, sample_pg_series};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn moments(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, var)
}

/// Two-sample Kolmogorov-Smirnov statistic.
fn ks_statistic(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

#[test]
fn sampler_matches_closed_form_moments() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 20_000;
    for b in [1.0, 2.0, 5.0] {
        for c in [0.0, 0.5, 2.0, 10.0] {
            let draws: Vec<f64> = (0..n).map(|_| sample_pg(b, c, &mut rng).unwrap()).collect();
            let (m, var) = moments(&draws);
            let se = (pg_variance(b, c) / n as f64).sqrt();
            assert!((m - pg_mean(b, c)).abs() < 4.0 * se, "b={b} c={c}: {m} vs {}", pg_mean(b, c));
            let rel = (var / pg_variance(b, c) - 1.0).abs();
            assert!(rel < 0.1, "b={b} c={c}: variance {var} vs {}", pg_variance(b, c));
        }
    }
}

#[test]
fn sum_of_unit_draws_matches_shape_two() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let n = 5_000;
    for c in [0.0, 1.5] {
        let summed: Vec<f64> = (0..n)
            .map(|_| sample_pg(1.0, c, &mut rng).unwrap() + sample_pg(1.0, c, &mut rng).unwrap())
            .collect();
        let direct: Vec<f64> = (0..n).map(|_| sample_pg(2.0, c, &mut rng).unwrap()).collect();
        let d = ks_statistic(summed, direct);
        // 1% critical value
        assert!(d < 1.63 * (2.0 / n as f64).sqrt(), "c={c}: D = {d}");
    }
}

#[test]
fn truncated_series_agrees_with_exact_sampler() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let n = 20_000;
    for (b, c) in [(1.0, 0.0), (3.0, 1.0), (2.5, 4.0)] {
        let draws: Vec<f64> = (0..n).map(|_| sample_pg_series(b, c, 200, &mut rng).unwrap()).collect();
        let (m, _) = moments(&draws);
        let se = (pg_variance(b, c) / n as f64).sqrt();
        assert!((m - pg_mean(b, c)).abs() < 4.0 * se, "b={b} c={c}: {m}");
    }
}

#[test]
fn laplace_identity_holds_in_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for (a, b, psi) in [(0.0, 1.0, 0.5), (2.0, 3.0, -1.0), (1.0, 5.0, 2.0)] {
        let chk = pg_laplace_lhs_rhs(a, b, psi, 20_000, &mut rng).unwrap();
        assert!(chk.z_score().abs() < 4.0, "({a},{b},{psi}): {chk:?}");
    }
}

#[test]
fn invalid_shape_is_rejected() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert!(sample_pg(0.0, 1.0, &mut rng).is_err());
    assert!(sample_pg(-1.0, 1.0, &mut rng).is_err());
}
