use osclab_models::*;
use osclab_relative::*;
use proptest::prelude::*;

fn smooth(m: &ModelFibration, c: &[f64]) -> Vec<f64> {
    m.grid_fn(|x, y| {
        c[0] * x + c[1] * x * x * y + c[2] * (1.5 * x + y).sin() + c[3] * (x * y).cos() + c[4] * x.powi(3)
    })
}

fn fibre_l2(m: &ModelFibration, r: &RelativeMetric, f: &[f64], g: &[f64]) -> Vec<f64> {
    let nx = m.nx();
    (0..m.ny()).map(|j| r.fibre_dot(m, j, &f[j * nx..(j + 1) * nx], &g[j * nx..(j + 1) * nx])).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn projection_is_idempotent(c in prop::collection::vec(-1.0f64..1.0, 5), eps in 0.0f64..0.03) {
        let m = build_model(&ModelConfig::proj_bundle(1, 20)).unwrap();
        let r = perturb_metric(&m, &reference_relative_metric(&m), &m.grid_fn(|x, y| eps * x * x * x * (1.0 + y))).unwrap();
        let eb = build_potential_bundle(&m, &r).unwrap();
        let phi = smooth(&m, &c);
        let p = project_e(&m, &r, &eb, &phi).unwrap();
        let pp = project_e(&m, &r, &eb, &p).unwrap();
        let gap = p.iter().zip(&pp).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        prop_assert!(gap < 1e-12);
    }

    #[test]
    fn vertical_operators_are_self_adjoint_and_nonnegative(
        c in prop::collection::vec(-1.0f64..1.0, 5),
        e in prop::collection::vec(-1.0f64..1.0, 5),
    ) {
        let m = build_model(&ModelConfig::proj_bundle(1, 28)).unwrap();
        let r = perturb_metric(&m, &reference_relative_metric(&m), &m.grid_fn(|x, y| 0.02 * x * x * x * (1.0 + y))).unwrap();
        let (f, g) = (smooth(&m, &c), smooth(&m, &e));
        for op in [vertical_laplacian, fibrewise_lichnerowicz] {
            let a = fibre_l2(&m, &r, &op(&m, &r, &f), &g);
            let b = fibre_l2(&m, &r, &f, &op(&m, &r, &g));
            let s = fibre_l2(&m, &r, &op(&m, &r, &f), &f);
            for j in 0..m.ny() {
                prop_assert!((a[j] - b[j]).abs() < 1e-10 * (1.0 + a[j].abs()), "{} {}", a[j], b[j]);
                prop_assert!(s[j] > -1e-10);
            }
        }
    }
}
