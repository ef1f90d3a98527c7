use osclab_models::kahler::{relative_ricci_form, scalar_curvature};
use osclab_models::*;

fn f1(n: usize) -> ModelFibration {
    build_model(&ModelConfig::proj_bundle(1, n)).unwrap()
}

#[test]
fn product_16_has_expected_grid() {
    let m = build_model(&ModelConfig::product(16)).unwrap();
    assert_eq!((m.nx(), m.ny(), m.fibre.azimuth, m.base.azimuth), (16, 16, 16, 16));
    assert_eq!(m.d, 0);
}

#[test]
fn hirzebruch_one_builds() {
    let m = f1(24);
    assert_eq!(m.kind, ModelKind::ProjBundle);
    assert_eq!(m.d, 1);
    assert_eq!(m.len(), 576);
}

#[test]
fn negative_degree_is_rejected() {
    let err = build_model(&ModelConfig::proj_bundle(-2, 16)).unwrap_err();
    assert!(err.to_string().contains("d < 0"));
}

#[test]
fn odd_azimuth_and_small_grids_are_rejected() {
    let mut c = ModelConfig::product(16);
    c.fibre_azimuth = 15;
    assert!(matches!(build_model(&c), Err(ModelError::OddAzimuth(15))));
    assert!(matches!(build_model(&ModelConfig::product(6)), Err(ModelError::TooFewNodes(6))));
}

#[test]
fn config_text_round_trip_and_errors() {
    let c = ModelConfig::parse("kind = ProjBundle\nd = 1\nfibre_nodes = 20 # comment\nbase_nodes = 18\nsymmetry = FullTorus\n")
        .unwrap();
    assert_eq!(c.d, 1);
    assert_eq!(c.fibre_azimuth, 20);
    assert_eq!(ModelConfig::parse(&c.to_text()).unwrap(), c);
    assert!(matches!(ModelConfig::parse("kind = Torus"), Err(ModelError::UnknownKind(_))));
    assert!(ModelConfig::parse("kind = Product\nbogus = 1").is_err());
}

#[test]
fn reference_product_has_no_mixed_or_horizontal_part() {
    let m = build_model(&ModelConfig::product(16)).unwrap();
    let r = reference_relative_metric(&m);
    assert!(r.form.ts.iter().all(|v| *v == 0.0));
    // horizontal part G_tt − G_ts²/G_ss
    assert!(r.form.tt.iter().all(|v| v.abs() < 1e-15));
}

#[test]
fn degree_zero_bundle_is_the_product() {
    let a = reference_relative_metric(&build_model(&ModelConfig::proj_bundle(0, 16)).unwrap());
    let b = reference_relative_metric(&build_model(&ModelConfig::product(16)).unwrap());
    assert_eq!(a.form, b.form);
}

#[test]
fn reference_fibre_volume_is_base_independent() {
    let m = f1(24);
    let r = reference_relative_metric(&m);
    assert!(r.volume_spread() < 1e-10);
    assert!((r.volume - 4.0 * std::f64::consts::PI).abs() < 1e-10);
}

#[test]
fn perturbations() {
    let m = build_model(&ModelConfig::product(16)).unwrap();
    let r = reference_relative_metric(&m);
    let same = perturb_metric(&m, &r, &vec![0.0; m.len()]).unwrap();
    assert_eq!(same.form, r.form);
    // pullbacks leave the fibre block alone
    let pb = m.pullback(&m.base_fn(|y| y * y * y - 0.2 * y));
    let p = perturb_metric(&m, &r, &pb).unwrap();
    for n in 0..m.len() {
        assert!((p.form.ss[n] - r.form.ss[n]).abs() < 1e-14);
    }
    // fibre height perturbation keeps volume
    let h = m.grid_fn(|x, _| 0.05 * x);
    let p = perturb_metric(&m, &r, &h).unwrap();
    assert!((p.volume - r.volume).abs() < 1e-10 * r.volume && p.volume_spread() < 1e-10);
    // positivity loss is reported
    let big = m.grid_fn(|x, _| 5.0 * x);
    assert!(matches!(perturb_metric(&m, &r, &big), Err(ModelError::Positivity { .. })));
    // φ then −φ
    let phi = m.grid_fn(|x, y| 0.03 * x * y + 0.02 * x * x);
    let back = perturb_metric(&m, &perturb_metric(&m, &r, &phi).unwrap(), &phi.iter().map(|v| -v).collect::<Vec<_>>())
        .unwrap();
    assert!(back.form.sub(&r.form).sup() < 1e-13);
}

#[test]
fn total_metric_positive_at_k10() {
    let m = f1(16);
    let t = total_metric(&m, &reference_relative_metric(&m), &reference_base_metric(&m), 10.0, vec![]);
    assert!(t.is_ok());
}

#[test]
fn relative_form_is_closed() {
    let m = f1(24);
    let r = RelativeMetric::from_parts(
        &m,
        m.base_fn(|y| 0.2 * y * y),
        m.grid_fn(|x, y| 0.02 * x * y + 0.01 * x * x * x),
        m.base_fn(|y| 0.1 * (1.0 - y * y)),
    )
    .unwrap();
    assert!(r.form.closedness_residual(&m) < 1e-8);
}

#[test]
fn charts_agree_on_forms_and_scalar_curvature() {
    let m = f1(24);
    let r = RelativeMetric::from_parts(&m, m.base_fn(|y| 0.3 * y), m.grid_fn(|x, y| 0.02 * x * y), vec![0.0; m.ny()])
        .unwrap();
    // fibre Ricci computed in the other chart and mapped back
    let rho1 = relative_ricci_form(&m, &r.form);
    let rho2 = relative_ricci_form(&m, &r.form.other_chart(&m)).other_chart(&m);
    assert!(rho1.sub(&rho2).sup() < 1e-9, "{}", rho1.sub(&rho2).sup());
    let t = total_metric(&m, &r, &reference_base_metric(&m), 5.0, vec![]).unwrap();
    let s1 = scalar_curvature(&m, &t.form);
    let s2 = m.flip_base(&scalar_curvature(&m, &t.form.other_chart(&m)));
    let gap = s1.iter().zip(&s2).fold(0.0f64, |a, (p, q)| a.max((p - q).abs()));
    assert!(gap < 1e-9, "{gap}");
}
