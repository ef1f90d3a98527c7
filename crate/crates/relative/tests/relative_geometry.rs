use std::f64::consts::PI;

use osclab_models::field::sup;
use osclab_models::*;
use osclab_relative::fibre::{apply, fibre_operators};
use osclab_relative::*;

fn f1(n: usize) -> ModelFibration {
    build_model(&ModelConfig::proj_bundle(1, n)).unwrap()
}

fn product(n: usize) -> ModelFibration {
    build_model(&ModelConfig::product(n)).unwrap()
}

fn perturbed(m: &ModelFibration, eps: f64) -> RelativeMetric {
    perturb_metric(m, &reference_relative_metric(m), &m.grid_fn(|x, y| eps * (x * x * x + x * y + 0.5 * x * x)))
        .unwrap()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()))
}

#[test]
fn fibre_volume_integral_is_constant() {
    let m = f1(20);
    let r = perturbed(&m, 0.02);
    let v = fibre_integral(&m, &r, Integrand::Density(&vec![1.0; m.len()])).unwrap();
    for x in &v {
        assert!((x - 4.0 * PI).abs() < 1e-10);
    }
    assert_eq!(
        fibre_integral(&m, &r, Integrand::Function(&vec![1.0; m.len()])),
        Err(RelativeError::DegreeTooLow)
    );
}

#[test]
fn weil_petersson_vanishes_on_product() {
    let m = product(16);
    let r = reference_relative_metric(&m);
    let c = curvature_data(&m, &r).unwrap();
    let mut rho_h = TwoFormField::zeros(m.len());
    rho_h.tt = c.rho_h.clone();
    let wp = fibre_integral(&m, &r, Integrand::Wedge(&rho_h)).unwrap();
    assert!(sup(&wp) < 1e-9);
}

#[test]
fn decomposition_examples() {
    let m = f1(20);
    let r = reference_relative_metric(&m);
    let eb = build_potential_bundle(&m, &r).unwrap();
    // pullback
    let psi = m.base_fn(|y| y * y - 0.3 * y);
    let dec = decompose(&m, &r, &eb, &m.pullback(&psi)).unwrap();
    assert!(max_abs_diff(&dec.base, &psi) < 1e-12);
    assert!(sup(&dec.e) < 1e-12 && sup(&dec.r) < 1e-12);
    // basis potential
    let h = eb.invariant_potential().to_vec();
    let dec = decompose(&m, &r, &eb, &h).unwrap();
    assert!(sup(&dec.base) < 1e-12 && max_abs_diff(&dec.e, &h) < 1e-12 && sup(&dec.r) < 1e-12);
}

#[test]
fn height_squared_has_no_e_part() {
    let m = product(16);
    let r = reference_relative_metric(&m);
    let eb = build_potential_bundle(&m, &r).unwrap();
    let dec = decompose(&m, &r, &eb, &m.grid_fn(|x, _| x * x)).unwrap();
    assert!(sup(&dec.e) < 1e-13);
    assert!(sup(&dec.r) > 0.1);
    assert!(max_abs_diff(&dec.base, &vec![1.0 / 3.0; m.ny()]) < 1e-13);
}

#[test]
fn decomposition_invariants_on_perturbed_metric() {
    let m = f1(24);
    let r = perturbed(&m, 0.03);
    let eb = build_potential_bundle(&m, &r).unwrap();
    let phi = m.grid_fn(|x, y| (2.0 * x + y).sin() + x.powi(4) * y);
    let dec = decompose(&m, &r, &eb, &phi).unwrap();
    let scale = sup(&phi);
    assert!(max_abs_diff(&dec.reconstruct(&m), &phi) < 1e-12 * scale);
    for f in [&dec.e, &dec.r] {
        assert!(sup(&r.fibre_integral(&m, f)) < 1e-11 * r.volume);
    }
    let nx = m.nx();
    for j in 0..m.ny() {
        let row = |f: &[f64]| f[j * nx..(j + 1) * nx].to_vec();
        assert!(r.fibre_dot(&m, j, &row(&dec.r), &row(eb.invariant_potential())).abs() < 1e-10);
    }
}

#[test]
fn round_fibres_have_rank_three() {
    let m = f1(24);
    let r = reference_relative_metric(&m);
    let eb = build_potential_bundle(&m, &r).unwrap();
    assert_eq!(eb.rank, 3);
    assert!(eb.analytic);
    assert!(eb.residual < 1e-8, "{}", eb.residual);
    // numeric nullspace agrees with the transplanted harmonics
    let shifted = RelativeMetric::from_parts(&m, m.base_fn(|y| 0.4 * y), vec![0.0; m.len()], vec![0.0; m.ny()]).unwrap();
    let eb = build_potential_bundle(&m, &shifted).unwrap();
    let h = eb.invariant_potential();
    let nx = m.nx();
    for j in 0..m.ny() {
        let ops = fibre_operators(&m, &shifted, j, 0);
        let res = apply(&ops.lichnerowicz, &h[j * nx..(j + 1) * nx]);
        assert!(sup(&res) < 1e-8);
    }
}

#[test]
fn perturbed_fibres_keep_rank_three_with_rotated_basis() {
    let m = f1(24);
    let r = perturbed(&m, 1e-3);
    let eb = build_potential_bundle(&m, &r).unwrap();
    assert_eq!(eb.rank, 3);
    assert!(!eb.analytic);
    assert!(eb.residual < 1e-8, "{}", eb.residual);
    // the invariant potential is the fibre moment map, made mean-free
    let mu = r.fibre_moment(&m);
    let mu = {
        let mean = m.pullback(&r.fibre_mean(&m, &mu));
        mu.iter().zip(&mean).map(|(a, b)| a - b).collect::<Vec<_>>()
    };
    let h = eb.invariant_potential();
    let nx = m.nx();
    for j in 0..m.ny() {
        let row = |f: &[f64]| f[j * nx..(j + 1) * nx].to_vec();
        let c = r.fibre_dot(&m, j, &row(h), &row(&mu)) / r.fibre_dot(&m, j, &row(&mu), &row(&mu));
        assert!(max_abs_diff(&row(h), &row(&mu).iter().map(|v| c * v).collect::<Vec<_>>()) < 1e-9);
    }
    // rotated away from the round basis
    let x = m.grid_fn(|x, _| x);
    assert!(max_abs_diff(h, &x) > 1e-5);
}

#[test]
fn rigid_fibres_error_cleanly() {
    let m = f1(16);
    let r = reference_relative_metric(&m);
    assert_eq!(build_potential_bundle_for(&m, &r, FibreKind::Rigid).unwrap_err(), RelativeError::RigidFibre);
}

#[test]
fn projection_examples() {
    let m = f1(20);
    let r = perturbed(&m, 0.01);
    let eb = build_potential_bundle(&m, &r).unwrap();
    let h = eb.invariant_potential().to_vec();
    assert!(max_abs_diff(&project_e(&m, &r, &eb, &h).unwrap(), &h) < 1e-12);
    let pb = m.pullback(&m.base_fn(|y| 1.0 + y));
    // pullbacks project to zero once their mean is removed by decompose
    let dec = decompose(&m, &r, &eb, &pb).unwrap();
    assert!(sup(&dec.e) < 1e-12);
}

#[test]
fn symplectic_curvature_examples() {
    let m = product(16);
    let r = reference_relative_metric(&m);
    assert!(sup(&symplectic_curvature(&m, &r).mu_f) < 1e-15);

    let m = f1(24);
    let r = reference_relative_metric(&m);
    let sc = symplectic_curvature(&m, &r);
    assert!(sup(&sc.mu_f) > 0.1);
    assert!(sup(&r.fibre_integral(&m, &sc.mu_f)) < 1e-10);
    // lies in E: equals −(1−y²)/4 · x
    let eb = build_potential_bundle(&m, &r).unwrap();
    let dec = decompose(&m, &r, &eb, &sc.mu_f).unwrap();
    assert!(sup(&dec.r) < 1e-12 && sup(&dec.base) < 1e-12);
    assert!(max_abs_diff(&sc.mu_f, &m.grid_fn(|x, y| -0.25 * x * (1.0 - y * y))) < 1e-12);
    // insensitive to adding a base form
    let shifted = r.with_nu(&m, m.base_fn(|y| 0.3 * (1.0 - y * y) * (1.0 + y))).unwrap();
    assert!(max_abs_diff(&symplectic_curvature(&m, &shifted).mu_f, &sc.mu_f) < 1e-13);
}

#[test]
fn minimal_coupling_reconstructs_and_matches_bracket() {
    for (m, eps) in [(product(24), 0.05), (f1(24), 0.03)] {
        let r = perturbed(&m, eps);
        let sc = symplectic_curvature(&m, &r);
        let h = horizontal_part(&r);
        let back: Vec<f64> = sc.mu_f.iter().zip(m.pullback(&sc.beta)).map(|(a, b)| a + b).collect();
        assert!(max_abs_diff(&back, &h) < 1e-12);
        assert!(sup(&r.fibre_integral(&m, &sc.mu_f)) < 1e-10);
        let hb = bracket_hamiltonian(&m, &r);
        assert!(max_abs_diff(&hb, &sc.mu_f) < 1e-6, "{}", max_abs_diff(&hb, &sc.mu_f));
    }
}

#[test]
fn relative_ricci_examples() {
    let m = product(16);
    let r = reference_relative_metric(&m);
    let c = curvature_data(&m, &r).unwrap();
    assert!(max_abs_diff(&c.rho_v, &r.form.ss) < 1e-12);
    assert!(sup(&c.rho_h) < 1e-12);

    let m = f1(24);
    let r = perturbed(&m, 0.03);
    let c = curvature_data(&m, &r).unwrap();
    assert!(c.chart_gap < 1e-8);
    // restriction to each fibre is the fibre Ricci form S·ω_b
    let nx = m.nx();
    for j in 0..m.ny() {
        let ops = fibre_operators(&m, &r, j, 0);
        for i in 0..nx {
            let n = j * nx + i;
            assert!((c.rho_v[n] - ops.scalar[i] * r.form.ss[n]).abs() < 1e-8);
        }
    }
    let with_nu = r.with_nu(&m, m.base_fn(|y| 0.2 * (1.0 - y * y))).unwrap();
    let c2 = curvature_data(&m, &with_nu).unwrap();
    assert!(c2.rho.sub(&c.rho).sup() < 1e-12);
}

#[test]
fn contractions() {
    let m = f1(16);
    let r = perturbed(&m, 0.02);
    let b = reference_base_metric(&m);
    for v in contract(&m, &r.form, Contraction::Vertical(&r)) {
        assert!((v - 1.0).abs() < 1e-14);
    }
    let mut pb = TwoFormField::zeros(m.len());
    pb.add_pullback(&m, &b.g);
    for v in contract(&m, &pb, Contraction::Horizontal(&r, &b)) {
        assert!((v - 1.0).abs() < 1e-14);
    }
    assert!(sup(&contract(&m, &pb, Contraction::Vertical(&r))) == 0.0);
}

#[test]
fn vertical_laplacian_examples() {
    let m = f1(24);
    let r = reference_relative_metric(&m);
    assert!(sup(&vertical_laplacian(&m, &r, &m.pullback(&m.base_fn(|y| y.powi(3))))) < 1e-12);
    let eb = build_potential_bundle(&m, &r).unwrap();
    let h = eb.invariant_potential();
    assert!(max_abs_diff(&vertical_laplacian(&m, &r, h), h) < 1e-11);
}

#[test]
fn lichnerowicz_on_degree_two_harmonics() {
    // D*D = Δ² − Δ on round fibres; Δ P_2 = 3 P_2 so D*D P_2 = 6 P_2
    let m = product(16);
    let r = reference_relative_metric(&m);
    let p2 = m.grid_fn(|x, _| 1.5 * x * x - 0.5);
    let out = fibrewise_lichnerowicz(&m, &r, &p2);
    assert!(max_abs_diff(&out, &p2.iter().map(|v| 6.0 * v).collect::<Vec<_>>()) < 1e-10);
    let h = build_potential_bundle(&m, &r).unwrap().invariant_potential().to_vec();
    assert!(sup(&fibrewise_lichnerowicz(&m, &r, &h)) < 1e-8);
}

#[test]
fn forms_agree_examples() {
    let m = f1(20);
    let r = perturbed(&m, 0.02);
    let nu = m.base_fn(|y| 0.1 * (1.0 - y * y) * (2.0 + y));
    let rep = forms_agree_on_fibres_check(&m, &r, &r.with_nu(&m, nu.clone()).unwrap(), 1e-10).unwrap();
    assert!(rep.agree && max_abs_diff(&rep.nu, &nu) < 1e-10);
    let rep = forms_agree_on_fibres_check(&m, &r, &r, 1e-10).unwrap();
    assert!(sup(&rep.nu) == 0.0);
    let psi = m.base_fn(|y| 0.1 * y * y * y);
    let r2 = perturb_metric(&m, &r, &m.pullback(&psi)).unwrap();
    let rep = forms_agree_on_fibres_check(&m, &r, &r2, 1e-10).unwrap();
    assert!(rep.agree);
    assert!(max_abs_diff(&rep.nu, &m.base_dt(&m.base_dt(&psi))) < 1e-10);
    let r3 = perturbed(&m, 0.05);
    assert!(matches!(forms_agree_on_fibres_check(&m, &r, &r3, 1e-10), Err(RelativeError::NotApplicable(_))));
}

#[test]
fn chart_gap_is_at_roundoff() {
    let m = build_model(&ModelConfig::proj_bundle(2, 20)).unwrap();
    let r = RelativeMetric::from_parts(&m, m.base_fn(|y| 0.3 * y), m.grid_fn(|x, y| 0.02 * x * x * x * y), m.base_fn(|y| 0.1 * (1.0 - y * y)))
        .unwrap();
    assert!(curvature_data(&m, &r).unwrap().chart_gap < 1e-10);
    assert!(relative_ricci(&m, &r).is_ok());
}
