use ingarch_core::nb::{discrepancy, select_r};
use proptest::prelude::*;

/// `max_x |F_Poi(x) / F_NB(x) - 1|` over `x = 0..=x_max`, NB with shape `r`
/// and mean `lambda`, both CDFs summed term by term.
fn cdf_ratio_gap(lambda: f64, r: f64, x_max: u32) -> f64 {
    let q = lambda / (r + lambda);
    let mut p_poi = (-lambda).exp();
    let mut p_nb = (r * (r / (r + lambda)).ln()).exp();
    let (mut f_poi, mut f_nb) = (p_poi, p_nb);
    let mut gap = (f_poi / f_nb - 1.0).abs();
    for x in 0..x_max {
        let v = x as f64;
        p_poi *= lambda / (v + 1.0);
        p_nb *= (v + r) / (v + 1.0) * q;
        f_poi += p_poi;
        f_nb += p_nb;
        gap = gap.max((f_poi / f_nb - 1.0).abs());
    }
    gap
}

#[test]
fn bound_dominates_cdf_ratio_gap_spot() {
    let d = discrepancy(2.0, 5.0);
    assert!(cdf_ratio_gap(2.0, 5.0, 200) <= d * (1.0 + 1e-12));
}

#[test]
fn bound_matches_gap_at_zero() {
    for (lambda, r) in [(0.3f64, 1.0f64), (2.0, 5.0), (10.0, 40.0), (25.0, 2.0)] {
        let gap0 = 1.0 - (-lambda).exp() / (r / (r + lambda)).powf(r);
        assert!((discrepancy(lambda, r) - gap0).abs() < 1e-12);
    }
}

#[test]
fn select_r_inverts_spot_value() {
    let d = discrepancy(1.0, 10.0);
    assert!((d - 0.0458).abs() < 1e-4);
    assert!((select_r(1.0, 0.0458) / 10.0 - 1.0).abs() < 1e-3);
}

proptest! {
    #[test]
    fn discrepancy_in_unit_interval(lambda in 1e-3f64..200.0, r in 1e-3f64..1e6) {
        let d = discrepancy(lambda, r);
        prop_assert!((0.0..1.0).contains(&d));
    }

    #[test]
    fn selected_r_is_feasible_and_minimal(lambda in 0.05f64..100.0, d in 1e-4f64..0.5) {
        prop_assume!(d < 1.0 - (-lambda).exp());
        let r = select_r(lambda, d);
        prop_assert!(r > 0.0);
        prop_assert!(discrepancy(lambda, r) <= d);
        prop_assert!(discrepancy(lambda, r * (1.0 - 1e-6)) > d);
    }

    #[test]
    fn discrepancy_decreases_in_r(lambda in 0.05f64..50.0, r in 0.01f64..1e4) {
        prop_assert!(discrepancy(lambda, 2.0 * r) <= discrepancy(lambda, r));
    }
}
