use osclab_expansion::*;
use osclab_models::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn laplacian_expansion_holds_for_random_functions(a in -1.0f64..1.0, b in -1.0f64..1.0, c in -1.0f64..1.0) {
        let m = build_model(&ModelConfig::proj_bundle(1, 20)).unwrap();
        let r = reference_relative_metric(&m);
        let base = reference_base_metric(&m);
        let phi = m.grid_fn(|x, y| a * x * y + b * (x + y).sin() + c * x * x * y * y);
        let rep = decay_fit(&m, &r, &base, Quantity::Laplacian(&phi), 1, &LADDER).unwrap();
        prop_assert!(rep.slope <= -1.85, "slope {}", rep.slope);
    }

    #[test]
    fn ricci_expansion_holds_for_perturbed_metrics(a in -0.05f64..0.05, b in -0.05f64..0.05) {
        let m = build_model(&ModelConfig::proj_bundle(1, 20)).unwrap();
        let r0 = reference_relative_metric(&m);
        let phi = m.grid_fn(|x, y| a * x * x * x * y + b * x * y * y);
        let r = perturb_metric(&m, &r0, &phi).unwrap();
        let base = reference_base_metric(&m);
        let rep = decay_fit(&m, &r, &base, Quantity::Ricci, 1, &LADDER).unwrap();
        prop_assert!(rep.slope <= -1.85, "slope {}", rep.slope);
    }

    #[test]
    fn fitted_slope_recovers_power_laws(p in -3.0f64..-0.5, c in 0.1f64..10.0) {
        let ks = LADDER;
        let ys: Vec<f64> = ks.iter().map(|k| c * k.powf(p)).collect();
        let (s, (lo, hi)) = fit_slope(&ks, &ys);
        prop_assert!((s - p).abs() < 1e-10);
        prop_assert!(lo <= s && s <= hi);
    }
}
