use osclab_correction::newton::{remainder_ratio, spurious_count};
use osclab_correction::*;
use osclab_models::field::sup;
use osclab_models::*;
use proptest::prelude::*;
use std::sync::OnceLock;

fn background() -> &'static (Background, CorrectionState) {
    static BG: OnceLock<(Background, CorrectionState)> = OnceLock::new();
    BG.get_or_init(|| {
        let model = build_model(&ModelConfig::proj_bundle(1, 12)).unwrap();
        let bg = Background::new(&model, &reference_relative_metric(&model), &reference_base_metric(&model)).unwrap();
        let st = CorrectionState::new(&bg, Mode::Extremal);
        let mut st = st;
        st.order = 1;
        st.base_fields = vec![vec![0.0; model.ny()]];
        st.e_fields = vec![vec![0.0; model.len()]];
        st.r_fields = vec![model.grid_fn(|x, y| 0.1 * (x * x - 1.0 / 3.0) * (1.0 + y))];
        (bg, st)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn planted_spurious_modes_are_found(m in 0usize..4, tiny in prop::collection::vec(-18.0f64..-15.0, 4), rest in prop::collection::vec(-9.0f64..0.0, 8)) {
        let mut sv: Vec<f64> = tiny[..m].iter().map(|e| 10f64.powf(*e)).collect();
        sv.extend(rest.iter().map(|e| 10f64.powf(*e)));
        sv.push(1.0);
        prop_assert_eq!(spurious_count(&sv), m);
    }

    #[test]
    fn tau_lift_is_linear(a in -2.0f64..2.0, b in -2.0f64..2.0, k in 5.0f64..50.0) {
        let (bg, st) = background();
        let m = &bg.model;
        let mb = bg.base_moment();
        let one = vec![1.0; m.ny()];
        let zero = vec![0.0; m.len()];
        let hb: Vec<f64> = mb.iter().map(|v| a * v + b).collect();
        let t = tau_lift(bg, st, k, &hb, &zero).unwrap();
        let t1 = tau_lift(bg, st, k, &mb, &zero).unwrap();
        let t0 = tau_lift(bg, st, k, &one, &zero).unwrap();
        let gap = sup(&(0..m.len()).map(|n| t.value[n] - a * t1.value[n] - b * t0.value[n]).collect::<Vec<_>>());
        prop_assert!(gap < 1e-9 * k, "{}", gap);
    }

    #[test]
    fn remainder_ratio_is_symmetric(c in prop::collection::vec(-1.0f64..1.0, 12)) {
        let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let (p, q, np, nq) = (&c[0..3], &c[3..6], &c[6..9], &c[9..12]);
        let r1 = remainder_ratio(np, nq, p, q, &norm);
        let r2 = remainder_ratio(nq, np, q, p, &norm);
        prop_assert!((r1 - r2).abs() <= 1e-12 * r1.abs().max(1.0));
    }
}
