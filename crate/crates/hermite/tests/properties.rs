use osclab_hermite::*;
use osclab_models::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn equivalence_across_random_diagonal_metrics(c in prop::collection::vec(-0.3f64..0.3, 6), d in 0i32..3) {
        let m = if d == 0 {
            build_model(&ModelConfig::product(20)).unwrap()
        } else {
            build_model(&ModelConfig::proj_bundle(d, 20)).unwrap()
        };
        let b = reference_base_metric(&m);
        let mut h = HermitianMetric::standard(&m, &[0, d], &b);
        h.weights[0] = m.base_fn(|y| c[0] * y + c[1] * y * y + c[2] * (2.0 * y).sin());
        h.weights[1] = m.base_fn(|y| c[3] * y + c[4] * y * y * y + c[5] * (y * y).cos());
        let rep = equivalence_gap(&m, &h).unwrap();
        prop_assert!(rep.gap <= 1e-6, "{rep:?}");
    }
}
