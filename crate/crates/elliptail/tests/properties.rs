//! Property tests of the algebraic invariants: scale invariance, affine
//! equivariance, homogeneity and serialization round trips.

use elliptail::elliptical::ConditionalMoments;
use elliptail::extremal::{estimate_ell, hill, HillConfig, VarianceRegime};
use elliptail::quantile::{corrected_level, high_quantile, MeasureKind, SequenceSchedule};
use elliptail::risk::{f_h, f_l};
use elliptail::{EllipticalModel, ExtremalEstimate, Family};
use proptest::prelude::*;

fn positive_sample() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(0.01f64..1e4, 50..200)
}

fn fake_estimate(gamma: f64, ell: f64, k: usize, n: usize) -> ExtremalEstimate {
    ExtremalEstimate {
        gamma_hat: gamma,
        eta_hat: 3.0 * gamma + 1.0,
        g_hat: 0.03,
        ell_hat: ell,
        var_eta: (3.0 * gamma).powi(2),
        var_ell_regime1: 0.0,
        var_ell_regime2: 0.0,
        regime: VarianceRegime::NhnDominates,
        se_eta: 0.0,
        se_ell: 0.0,
        k,
        h: 0.2,
        n,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// hill(c·w) = hill(w): bit-exact for power-of-two c, 1e-12 otherwise.
    #[test]
    fn hill_scale_invariance(w in positive_sample(), pow in -20i32..20, c in 0.001f64..1e3) {
        let k = w.len() / 4;
        prop_assume!(k >= 1);
        let cfg = HillConfig::new(k);
        let base = hill(&w, &cfg).unwrap();
        let two_k = (2.0f64).powi(pow);
        let scaled: Vec<f64> = w.iter().map(|v| v * two_k).collect();
        prop_assert_eq!(hill(&scaled, &cfg).unwrap(), base);
        let scaled: Vec<f64> = w.iter().map(|v| v * c).collect();
        let h = hill(&scaled, &cfg).unwrap();
        prop_assert!((h - base).abs() <= 1e-12 * base.abs().max(1.0));
    }

    /// Hill is a function of the multiset of values only.
    #[test]
    fn hill_permutation_invariance(w in positive_sample(), seed in 0u64..1000) {
        let k = w.len() / 4;
        prop_assume!(k >= 1);
        let cfg = HillConfig::new(k);
        let base = hill(&w, &cfg).unwrap();
        let mut shuffled = w.clone();
        // Cheap deterministic shuffle.
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        for i in (1..shuffled.len()).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let j = (state >> 33) as usize % (i + 1);
            shuffled.swap(i, j);
        }
        prop_assert_eq!(hill(&shuffled, &cfg).unwrap(), base);
    }

    /// ℓ̂ is homogeneous of degree -1 in ĝ (bit-exact on binary scalings).
    #[test]
    fn ell_homogeneity(gamma in 0.05f64..2.0, g in 1e-6f64..10.0, pow in -12i32..12) {
        let base = estimate_ell(gamma, g, 3).unwrap();
        let c = (2.0f64).powi(pow);
        prop_assert_eq!(estimate_ell(gamma, g * c, 3).unwrap(), base / c);
    }

    /// Mahalanobis distances are nonnegative, vanish only at the center, and
    /// are symmetric under reflection through it.
    #[test]
    fn mahalanobis_properties(
        mu in proptest::collection::vec(-5.0f64..5.0, 3),
        x in proptest::collection::vec(-5.0f64..5.0, 3),
        scale in 0.5f64..3.0,
        off in -0.4f64..0.4,
    ) {
        let sigma = vec![
            vec![scale, off, 0.0],
            vec![off, scale, off],
            vec![0.0, off, scale],
        ];
        let model = EllipticalModel::from_parts(Family::Gaussian, &mu, &sigma);
        prop_assume!(model.is_ok());
        let model = model.unwrap();
        let m = model.mahalanobis(&x).unwrap();
        prop_assert!(m >= 0.0);
        prop_assert_eq!(model.mahalanobis(&mu).unwrap(), 0.0);
        let reflected: Vec<f64> = mu.iter().zip(x.iter()).map(|(m, xi)| 2.0 * m - xi).collect();
        let m_ref = model.mahalanobis(&reflected).unwrap();
        prop_assert!((m - m_ref).abs() <= 1e-9 * m.max(1.0));
    }

    /// Location-scale equivariance of the high-quantile estimate: mapping
    /// (mu, sigma) -> (t + s·mu, s·sigma) maps the value to t + s·value.
    #[test]
    fn high_quantile_location_scale_equivariance(
        t in -10.0f64..10.0,
        s in 0.1f64..10.0,
        gamma in 0.2f64..0.8,
        ell in 0.5f64..8.0,
    ) {
        let n = 2000usize;
        let w: Vec<f64> = (1..=n).map(|i| (i as f64 / (n + 1) as f64).powf(-0.5)).collect();
        let schedule = SequenceSchedule::new(1.25, 0.6, 0.2, -1.0, 0.5, 3).unwrap();
        let est = fake_estimate(gamma, ell, schedule.k(n), n);
        let base = ConditionalMoments { mu_cond: 0.0, sigma_cond: 1.0, m_x: 1.0 };
        let mapped = ConditionalMoments { mu_cond: t, sigma_cond: s, m_x: 1.0 };
        let r0 = high_quantile(&w, &base, &est, &schedule).unwrap();
        let r1 = high_quantile(&w, &mapped, &est, &schedule).unwrap();
        prop_assert_eq!(r1.value, t + s * r0.value);
        prop_assert!(r1.ci_low <= r1.value && r1.value <= r1.ci_high);
    }

    /// ṽ_n stays in (0,1) and equals 1-α exactly at ℓ̂ = 1.
    #[test]
    fn corrected_level_in_unit_interval(ell in 0.01f64..20.0, alpha in 0.5f64..0.999999) {
        let (v, _) = corrected_level(ell, alpha);
        prop_assert!(v > 0.0 && v < 1.0);
        let (v1, clamped) = corrected_level(1.0, alpha);
        prop_assert_eq!(v1, 1.0 - alpha);
        prop_assert!(!clamped);
    }

    /// f_L and f_H respect their existence domains and the TVaR identity.
    #[test]
    fn conversion_factor_domains(gamma in 0.01f64..0.95, p in 1.0f64..4.0) {
        let l = f_l(gamma, p);
        if gamma < 1.0 / (p - 1.0).max(1e-12) {
            let v = l.unwrap();
            prop_assert!(v.is_finite() && v > 0.0);
        } else {
            prop_assert!(l.is_err());
        }
        let h = f_h(gamma, p);
        if gamma < 1.0 / p {
            let v = h.unwrap();
            prop_assert!(v.is_finite() && v > 0.0);
        } else {
            prop_assert!(h.is_err());
        }
        prop_assert_eq!(f_h(gamma, 1.0).unwrap(), 1.0 / (1.0 - gamma));
    }

    /// Measure tags round-trip through serde.
    #[test]
    fn measure_kind_serde_round_trip(p in 1.0f64..6.0, which in 0usize..3) {
        let kind = match which {
            0 => MeasureKind::Quantile,
            1 => MeasureKind::LpQuantile(p),
            _ => MeasureKind::HaezendonckGoovaerts(p),
        };
        let json = serde_json::to_string(&kind).unwrap();
        let back: MeasureKind = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(back.tag(), kind.tag());
    }

    /// Model JSON round trip preserves mu and sigma.
    #[test]
    fn model_serde_round_trip(
        mu in proptest::collection::vec(-3.0f64..3.0, 2),
        diag in 0.5f64..4.0,
        off in -0.3f64..0.3,
    ) {
        let sigma = vec![vec![diag, off], vec![off, diag]];
        let model = EllipticalModel::from_parts(Family::Student { nu: 2.5 }, &mu, &sigma);
        prop_assume!(model.is_ok());
        let model = model.unwrap();
        let json = serde_json::to_string(&model).unwrap();
        let back: EllipticalModel = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(model.mu(), back.mu());
        prop_assert_eq!(model.sigma(), back.sigma());
    }
}
