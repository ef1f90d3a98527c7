use osclab_hermite::*;
use osclab_models::field::sup;
use osclab_models::*;
use osclab_osc::osc_field;
use osclab_relative::*;

fn f1(n: usize) -> ModelFibration {
    build_model(&ModelConfig::proj_bundle(1, n)).unwrap()
}

fn product(n: usize) -> ModelFibration {
    build_model(&ModelConfig::product(n)).unwrap()
}

fn gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

fn bumpy(m: &ModelFibration, degrees: &[i32]) -> HermitianMetric {
    let b = reference_base_metric(m);
    let mut h = HermitianMetric::standard(m, degrees, &b);
    for (i, u) in h.weights.iter_mut().enumerate() {
        let s = i as f64 + 1.0;
        *u = m.base_fn(|y| 0.2 * (s * y).sin() + 0.1 * y * y * s);
    }
    h
}

#[test]
fn curvature_integrates_to_degree() {
    let m = f1(20);
    let h = bumpy(&m, &[0, 1]);
    for (q, d) in h.degrees_by_quadrature(&m).iter().zip([0.0, 1.0]) {
        assert!((q - d).abs() < 1e-9);
    }
    let rep = he_residual(&m, &h);
    assert!((rep.trace_degree - 1.0).abs() < 1e-9);
}

#[test]
fn residual_examples() {
    let m = product(16);
    let b = reference_base_metric(&m);
    assert!(he_residual(&m, &HermitianMetric::standard(&m, &[0, 0], &b)).sup < 1e-14);
    assert!(he_residual(&m, &HermitianMetric::standard(&m, &[1, 1], &b)).sup < 1e-14);
    let rep = he_residual(&m, &HermitianMetric::standard(&m, &[0, 1], &b));
    assert!((rep.lambda - 0.25).abs() < 1e-14);
    assert!(rep.residual[0].iter().all(|v| (v + 0.25).abs() < 1e-12));
    assert!(rep.residual[1].iter().all(|v| (v - 0.25).abs() < 1e-12));
    assert!((rep.slopes[0] - 0.0).abs() < 1e-14 && (rep.slopes[1] - 0.5).abs() < 1e-14);
}

#[test]
fn flow_examples() {
    let m = f1(20);
    let b = reference_base_metric(&m);
    let (_, tr) = he_flow(&m, &HermitianMetric::standard(&m, &[0, 1], &b), &FlowOptions::default()).unwrap();
    assert_eq!(tr.steps, 0);

    let (h, tr) = he_flow(&m, &bumpy(&m, &[0, 1]), &FlowOptions::default()).unwrap();
    assert!(tr.steps > 0);
    for w in tr.residuals.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-12));
    }
    let rep = he_residual(&m, &h);
    for (r, mu) in rep.residual.iter().zip(&rep.slopes) {
        assert!(r.iter().all(|v| (v + rep.lambda - mu).abs() < 1e-8));
    }
    // limit weights are constant: constant-curvature metrics
    for u in &h.weights {
        assert!(gap(u, &vec![u[0]; u.len()]) < 1e-7);
    }

    let (h, _) = he_flow(&m, &bumpy(&m, &[2]), &FlowOptions::default()).unwrap();
    let lf = h.mean_curvature(&m);
    assert!(lf[0].iter().all(|v| (v - 1.0).abs() < 1e-8));
}

#[test]
fn explicit_flow_checks_stability() {
    let m = f1(20);
    let h = bumpy(&m, &[0, 1]);
    let bad = FlowOptions { dt: 0.1, scheme: Scheme::ExplicitEuler, ..Default::default() };
    assert!(matches!(he_flow(&m, &h, &bad), Err(HeError::Cfl { .. })));
    let ok = FlowOptions { dt: 1e-3, scheme: Scheme::ExplicitEuler, tol: 1e-6, max_steps: 100_000 };
    let (h2, _) = he_flow(&m, &h, &ok).unwrap();
    assert!(he_residual(&m, &h2).sup < 0.26);
}

#[test]
fn induced_metric_examples() {
    let m = product(16);
    let b = reference_base_metric(&m);
    let r = induced_relative_metric(&m, &HermitianMetric::standard(&m, &[0, 0], &b)).unwrap();
    assert_eq!(r.form, reference_relative_metric(&m).form);

    let m = f1(20);
    let b = reference_base_metric(&m);
    let mut h = HermitianMetric::standard(&m, &[0, 1], &b);
    let r = induced_relative_metric(&m, &h).unwrap();
    let rep = forms_agree_on_fibres_check(&m, &reference_relative_metric(&m), &r, 1e-12).unwrap();
    assert!(rep.agree);
    // overall scale of h is invisible
    h = bumpy(&m, &[0, 1]);
    let mut hs = h.clone();
    for u in hs.weights.iter_mut() {
        for v in u.iter_mut() {
            *v += 0.7;
        }
    }
    let a = induced_relative_metric(&m, &h).unwrap();
    let c = induced_relative_metric(&m, &hs).unwrap();
    assert!(a.form.sub(&c.form).sup() < 1e-13);
    assert!(matches!(
        induced_relative_metric(&m, &HermitianMetric::standard(&m, &[0, 2], &b)),
        Err(HeError::DegreeMismatch { .. })
    ));
}

#[test]
fn equivalence_examples() {
    // Hermite–Einstein on the trivial bundle: both sides vanish
    let m = product(20);
    let (h, _) = he_flow(&m, &bumpy(&m, &[1, 1]), &FlowOptions::default()).unwrap();
    let rep = equivalence_gap(&m, &h).unwrap();
    assert!(rep.gap <= 1e-7 && rep.osc_sup <= 1e-7 && rep.he_sup <= 1e-7, "{rep:?}");
    let b = reference_base_metric(&m);
    let rep = equivalence_gap(&m, &HermitianMetric::standard(&m, &[0, 0], &b)).unwrap();
    assert!(rep.gap == 0.0 && rep.osc_sup == 0.0 && rep.he_sup == 0.0);
    // non-Hermite–Einstein: residuals O(1), gap small
    let m = f1(24);
    let rep = equivalence_gap(&m, &bumpy(&m, &[0, 1])).unwrap();
    assert!(rep.gap <= 1e-6 && rep.osc_sup > 0.1 && rep.he_sup > 0.1, "{rep:?}");
}

#[test]
fn comoment_is_a_fibre_potential() {
    let m = f1(24);
    let h = bumpy(&m, &[0, 1]);
    let r = induced_relative_metric(&m, &h).unwrap();
    let mu = symplectic_curvature(&m, &r).mu_f;
    let b = &h.base;
    let gb = m.pullback(&b.g);
    let l: Vec<f64> = mu.iter().zip(&gb).map(|(a, g)| a / g).collect();
    assert!(gap(&vertical_laplacian(&m, &r, &l), &l) < 1e-7);
    assert!(sup(&osc_field(&m, &r, b).unwrap()) > 0.1);
}

#[test]
fn osc_solve_and_he_flow_reach_the_same_metric() {
    use osclab_osc::{osc_solve, SolveOptions, SolveTarget};
    let m = f1(20);
    let h = bumpy(&m, &[0, 1]);
    let r = induced_relative_metric(&m, &h).unwrap();
    let (hh, _) = he_flow(&m, &h, &FlowOptions::default()).unwrap();
    let he_limit = induced_relative_metric(&m, &hh).unwrap();
    let opts = SolveOptions { target: SolveTarget::Esc, ..Default::default() };
    let (w, _) = osc_solve(&m, &r, &reference_base_metric(&m), &opts).unwrap();
    // both limits are direct sums: same up to a fibrewise boost
    let boost = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let aligned = RelativeMetric::from_parts(&m, vec![boost(&w.shift); m.ny()], vec![0.0; m.len()], vec![0.0; m.ny()])
        .unwrap();
    assert!(aligned.form.sub(&w.form).sup() < 1e-6);
    assert!(gap(&he_limit.shift, &vec![boost(&he_limit.shift); m.ny()]) < 1e-7);
}
