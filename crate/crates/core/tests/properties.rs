use eqfield_core::dynamics::{rhs_onecut, state_at, EvolveOptions};
use eqfield_core::measure::audit_equilibrium;
use eqfield_core::solver::onecut_unknowns;
use eqfield_core::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn outer_endpoints_spread(b1 in 0.2f64..2.0, b2 in 0.2f64..2.0, g in 0.2f64..4.0, frac in 0.05f64..0.95) {
        let cfg = ChargeConfig::new(b1, b2, g).unwrap();
        let s = state_at(&cfg, frac * cfg.total_mass(), &EvolveOptions::default()).unwrap();
        match s {
            SupportState::OneCut { .. } => {
                let r = rhs_onecut(&cfg, s.t(), &onecut_unknowns(&s).unwrap()).unwrap();
                prop_assert!(r[0] < 0.0 && r[1] > 0.0);
            }
            SupportState::TwoCut { a, b1, .. } => {
                let r = eqfield_core::dynamics::rhs_twocut(&cfg, s.t(), &[a[0], a[1], a[2], a[3], b1]).unwrap();
                prop_assert!(r[0] < 0.0 && r[1] > 0.0 && r[2] < 0.0 && r[3] > 0.0);
            }
        }
        let audit = audit_equilibrium(&cfg, &s, 20, 20).unwrap();
        prop_assert!(audit.passes(1e-6, 1e-8), "{audit:?}");
    }

    #[test]
    fn window_swap_reciprocal(b1 in 0.05f64..0.95, b2 in 0.05f64..0.95) {
        prop_assume!(classify(b1, b2).unwrap().region == Region::Omega0);
        let w = gamma_tilde_window(b1, b2).unwrap().unwrap();
        let v = gamma_tilde_window(b2, b1).unwrap().unwrap();
        prop_assert!((w.gamma_tilde_1 * v.gamma_tilde_2 - 1.0).abs() < 1e-9);
        prop_assert!((w.double_point_1 + v.double_point_2).abs() < 1e-9);
    }

    #[test]
    fn support_state_json_roundtrip(a1 in -5.0f64..0.0, w in 0.1f64..5.0, re in -3.0f64..3.0, im in 0.01f64..3.0) {
        let s = SupportState::one_cut(0.3, a1, a1 + w, BZeros::ConjugatePair { re, im }).unwrap();
        let json = serde_json::to_string(&s).unwrap();
        let back: SupportState = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(back, s);
    }
}

#[test]
fn invalid_configs_rejected_by_serde() {
    let bad = r#"{"beta1": -1.0, "beta2": 0.5, "gamma": 1.0}"#;
    assert!(serde_json::from_str::<ChargeConfig>(bad).is_err());
    let good = r#"{"beta1": 1.0, "beta2": 0.5, "gamma": 1.0}"#;
    assert_eq!(serde_json::from_str::<ChargeConfig>(good).unwrap(), ChargeConfig::new(1.0, 0.5, 1.0).unwrap());
}
