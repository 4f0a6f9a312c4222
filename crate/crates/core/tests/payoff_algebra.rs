use pgg_core::{dilemma_bounds, payoff_cooperator, payoff_defector, predicted_critical_r};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

/// Cooperator minus defector payoff when mimicking agents turn a fraction
/// `rho` of the defectors (for a cooperating focal) or of the cooperators
/// (for a defecting focal) into copies of the focal player.
fn mimic_advantage(k: usize, rho: f64, n_c: usize, r: f64) -> f64 {
    let n_d = (k - n_c) as f64;
    let n_d_eff = (1.0 - rho) * n_d;
    let n_c_eff = (1.0 - rho) * n_c as f64;
    let p_c = r * (k as f64 - n_d_eff + 1.0) / (k as f64 + 1.0) - 1.0;
    let p_d = r * n_c_eff / (k as f64 + 1.0);
    p_c - p_d
}

#[test]
fn defector_advantage_is_constant_over_ten_thousand_draws() {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(2024);
    for _ in 0..10_000 {
        let k = rng.gen_range(1..=12usize);
        let n_c = rng.gen_range(0..=k);
        let r = rng.gen_range(0.01..20.0);
        let gap = payoff_defector(n_c, k, r).unwrap() - payoff_cooperator(n_c, k, r).unwrap();
        let expected = 1.0 - r / (k as f64 + 1.0);
        assert!(
            (gap - expected).abs() <= 8.0 * f64::EPSILON * r.max(1.0),
            "k={k} n_c={n_c} r={r}: {gap} vs {expected}"
        );
    }
}

#[test]
fn mimic_condition_flips_at_predicted_threshold() {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(7);
    for _ in 0..10_000 {
        let k = rng.gen_range(1..=12usize);
        let rho = rng.gen_range(0.0..=1.0);
        let n_c = rng.gen_range(0..=k);
        let r_star = predicted_critical_r(k, rho).unwrap();
        let at = mimic_advantage(k, rho, n_c, r_star);
        assert!(at.abs() <= 1e-12, "k={k} rho={rho} n_c={n_c}: {at}");
        let eps = 1e-9 * r_star;
        assert!(mimic_advantage(k, rho, n_c, r_star + eps) > 0.0);
        assert!(mimic_advantage(k, rho, n_c, r_star - eps) < 0.0);
    }
}

#[test]
fn predicted_threshold_is_monotone_and_bounded() {
    for k in 1..=20 {
        let (low, high) = dilemma_bounds(k).unwrap();
        assert_eq!(predicted_critical_r(k, 0.0).unwrap(), high);
        assert_eq!(predicted_critical_r(k, 1.0).unwrap(), low);
        let mut prev = f64::INFINITY;
        for i in 0..=100 {
            let v = predicted_critical_r(k, i as f64 / 100.0).unwrap();
            assert!((low..=high).contains(&v));
            assert!(v < prev);
            prev = v;
        }
    }
}

proptest! {
    #[test]
    fn full_cooperation_beats_full_defection_iff_r_above_one(k in 1usize..30, r in 0.01f64..20.0) {
        let diff = payoff_cooperator(k, k, r).unwrap() - payoff_defector(0, k, r).unwrap();
        prop_assert!((diff - (r - 1.0)).abs() < 1e-12);
        if (r - 1.0).abs() > 1e-9 {
            prop_assert_eq!(diff > 0.0, r > 1.0);
        }
    }

    #[test]
    fn defector_outscores_cooperator_iff_inside_dilemma(k in 1usize..30, n in 0usize..30, r in 0.01f64..40.0) {
        let n_c = n.min(k);
        let gap = payoff_defector(n_c, k, r).unwrap() - payoff_cooperator(n_c, k, r).unwrap();
        let boundary = (k + 1) as f64;
        if (r - boundary).abs() > 1e-9 {
            prop_assert_eq!(gap > 0.0, r < boundary);
        }
    }

    #[test]
    fn payoffs_reject_too_many_cooperators(k in 1usize..30, extra in 1usize..5, r in 0.1f64..10.0) {
        prop_assert!(payoff_cooperator(k + extra, k, r).is_err());
        prop_assert!(payoff_defector(k + extra, k, r).is_err());
    }
}
