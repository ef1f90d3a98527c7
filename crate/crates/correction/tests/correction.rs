use osclab_correction::newton::{derivative_matrices, remainder_ratio};
use osclab_correction::steps::{base_operator_matrix, invariant_pl1};
use osclab_correction::*;
use osclab_expansion::scalar_order_one;
use osclab_models::field::sup;
use osclab_models::kahler::scalar_curvature;
use osclab_models::spectral::legendre;
use osclab_models::*;
use osclab_relative::{decompose, fibrewise_lichnerowicz};

fn setup(d: i32) -> Background {
    let model = build_model(&ModelConfig::proj_bundle(d, 20)).unwrap();
    let omega = reference_relative_metric(&model);
    let base = reference_base_metric(&model);
    Background::new(&model, &omega, &base).unwrap()
}

fn rounds(bg: &Background, mode: Mode, r: usize) -> (CorrectionState, Vec<RoundReport>) {
    correct_to(bg, &CorrectionState::new(bg, mode), r, &RoundOptions::default()).unwrap()
}

#[test]
fn product_rounds_only_move_constants() {
    let bg = setup(0);
    let (st, reps) = rounds(&bg, Mode::Csck, 2);
    for f in st.base_fields.iter().chain(&st.e_fields).chain(&st.r_fields) {
        assert!(sup(f) < 1e-9, "{}", sup(f));
    }
    assert!((st.constants[1] - 1.0).abs() < 1e-9);
    assert!(reps[0].exit.slope <= -1.8 && reps[1].exit.slope <= -2.8);
}

#[test]
fn product_extremal_pipeline_matches_csck() {
    let bg = setup(0);
    let (a, _) = rounds(&bg, Mode::Csck, 2);
    let (b, _) = rounds(&bg, Mode::Extremal, 2);
    for (x, y) in a.e_fields.iter().zip(&b.e_fields).chain(a.r_fields.iter().zip(&b.r_fields)) {
        let g = sup(&x.iter().zip(y).map(|(p, q)| p - q).collect::<Vec<_>>());
        assert!(g < 1e-10, "{g}");
    }
    assert!(b.fibre_coeffs.iter().chain(&b.base_coeffs).all(|v| v.abs() < 1e-9));
}

#[test]
fn hirzebruch_first_round_gains_fibre_potential() {
    let bg = setup(1);
    let (st, reps) = rounds(&bg, Mode::Extremal, 1);
    // Round invariant fibres: no R correction, h₁ = −P_s.
    assert!(sup(&st.r_fields[0]) < 1e-9);
    assert!((reps[0].kappa + 1.0).abs() < 1e-6);
    assert!((st.constants[1] - 1.0).abs() < 1e-6);
    assert!(reps[0].exit.slope <= -1.8, "{}", reps[0].exit.slope);
    assert!(reps[0].drift.abs() < 1e-8);
}

#[test]
fn hirzebruch_second_round_decay() {
    let bg = setup(1);
    let (st, reps) = rounds(&bg, Mode::Extremal, 2);
    assert_eq!(st.order, 2);
    assert!(reps[1].exit.slope <= -2.8, "{}", reps[1].exit.slope);
    assert!(sup(&st.r_fields[1]) > 1e-3);
}

#[test]
fn csck_mode_rejects_hirzebruch() {
    let bg = setup(1);
    let err = correction_round(&bg, &CorrectionState::new(&bg, Mode::Csck), &RoundOptions::default()).unwrap_err();
    assert!(matches!(err, CorrectionError::NontrivialKernel(_)));
}

#[test]
fn entry_check_rejects_non_osc_metric() {
    let bg = setup(1);
    let m = &bg.model;
    let pert = perturb_metric(m, &bg.omega, &m.grid_fn(|x, y| 0.1 * (1.0 - x * x) * y)).unwrap();
    let bgp = Background::new(m, &pert, &bg.base).unwrap();
    let err = correction_round(&bgp, &CorrectionState::new(&bgp, Mode::Extremal), &RoundOptions::default());
    assert!(matches!(err, Err(CorrectionError::DecayFit { order: 0, .. })));
}

#[test]
fn order_cap() {
    let bg = setup(0);
    let (st, _) = rounds(&bg, Mode::Csck, 3);
    let err = correction_round(&bg, &st, &RoundOptions::default()).unwrap_err();
    assert_eq!(err, CorrectionError::OrderTooHigh(4));
}

#[test]
fn extraction_recovers_order_one_scalar() {
    let bg = setup(1);
    let st = CorrectionState::new(&bg, Mode::Extremal);
    let ex = extract_coefficient(&bg, &st, 1, &round::EXTRACTION_LADDER, 5).unwrap();
    assert!(ex.noise < 1e-8, "{}", ex.noise);
    let e1 = ex.coefficient;
    let s1 = scalar_order_one(&bg.model, &bg.omega, &bg.base).unwrap();
    let gap = sup(&e1.iter().zip(&s1).map(|(a, b)| a - b).collect::<Vec<_>>());
    assert!(gap < 1e-7, "{gap}");
}

#[test]
fn correction_fields_stay_in_their_summand() {
    let bg = setup(1);
    let (st, _) = rounds(&bg, Mode::Extremal, 2);
    let m = &bg.model;
    for j in 0..2 {
        let d = decompose(m, &bg.omega, &bg.eb, &st.e_fields[j]).unwrap();
        assert!(sup(&d.base).max(sup(&d.r)) < 1e-10);
        let l = decompose(m, &bg.omega, &bg.eb, &st.r_fields[j]).unwrap();
        assert!(sup(&l.base).max(sup(&l.e)) < 1e-10);
        let f = decompose(m, &bg.omega, &bg.eb, &m.pullback(&st.base_fields[j])).unwrap();
        assert!(sup(&f.e).max(sup(&f.r)) < 1e-10);
    }
}

#[test]
fn base_step_inverts_second_harmonic() {
    let bg = setup(1);
    let p2 = bg.model.base_fn(|y| legendre(2, y).0);
    let s = solve_base_step(&bg, &p2, Mode::Csck).unwrap();
    // D*D P₂ = λ(λ−1) P₂ with λ = 3 on the round base.
    let gap = sup(&s.f.iter().zip(&p2).map(|(a, b)| a - b / 6.0).collect::<Vec<_>>());
    assert!(gap < 1e-9, "{gap}");
    assert!(s.residual < 1e-9);
    let a = base_operator_matrix(&bg);
    let k = &a * nalgebra::DVector::from_column_slice(&bg.base_moment());
    assert!(k.amax() < 1e-9);
}

#[test]
fn base_step_kernel_handling() {
    let bg = setup(0);
    let y = bg.model.base_fn(|y| 0.5 + y);
    assert!(matches!(solve_base_step(&bg, &y, Mode::Csck), Err(CorrectionError::NontrivialKernel(_))));
    let s = solve_base_step(&bg, &y, Mode::Extremal).unwrap();
    assert!(sup(&s.f) < 1e-12);
    assert!((s.beta[0] + 0.5).abs() < 1e-10 && (s.beta[1] - 1.0).abs() < 1e-10);
}

#[test]
fn e_step_nullspace_and_manufactured() {
    let bg = setup(1);
    let m = &bg.model;
    let op = invariant_pl1(&bg, m.ny()).unwrap();
    let h = bg.eb.invariant_potential().to_vec();
    let s = solve_e_step(&bg, &op, &h, Mode::Extremal).unwrap();
    assert!(sup(&s.d) < 1e-9 && (s.kappa - 1.0).abs() < 1e-9);
    assert!(matches!(solve_e_step(&bg, &op, &h, Mode::Csck), Err(CorrectionError::NontrivialKernel(_))));
    // ψ = p L₁ d* in Galerkin form, d* = P₂(y) h.
    let idx = op.invariant_indices();
    let n = idx.len();
    let mass = nalgebra::DMatrix::from_fn(n, n, |a, b| op.mass[(idx[a], idx[b])]);
    let mat = nalgebra::DMatrix::from_fn(n, n, |a, b| op.matrix[(idx[a], idx[b])]);
    let mut star = nalgebra::DVector::zeros(n);
    star[2] = 1.0;
    let gamma = mass.cholesky().unwrap().solve(&(&mat * &star));
    let secs = osclab_expansion::e_sections(m, &bg.eb, n - 1);
    let field = |c: &nalgebra::DVector<f64>| -> Vec<f64> { (0..m.len()).map(|q| (0..n).map(|a| c[a] * secs[a][q]).sum()).collect() };
    let s = solve_e_step(&bg, &op, &field(&gamma), Mode::Extremal).unwrap();
    let gap = sup(&s.d.iter().zip(field(&star)).map(|(a, b)| a - b).collect::<Vec<_>>());
    assert!(gap < 1e-8 && s.kappa.abs() < 1e-8, "{gap} {}", s.kappa);
}

#[test]
fn r_step_solves_vertical_equation() {
    let bg = setup(1);
    let m = &bg.model;
    let raw = m.grid_fn(|x, y| x * x * (1.0 + 0.3 * y) + 0.2 * x.powi(3));
    let psi = decompose(m, &bg.omega, &bg.eb, &raw).unwrap().r;
    let s = solve_r_step(&bg, &psi).unwrap();
    let back = fibrewise_lichnerowicz(m, &bg.omega, &s.l);
    let gap = sup(&back.iter().zip(&psi).map(|(a, b)| a - b).collect::<Vec<_>>());
    assert!(gap < 1e-8 * sup(&psi), "{gap}");
    let base = m.grid_fn(|_, y| y);
    assert!(matches!(solve_r_step(&bg, &base), Err(CorrectionError::NotInR(_))));
}

#[test]
fn jacobian_matches_central_differences() {
    let bg = setup(1);
    let (st, _) = rounds(&bg, Mode::Extremal, 2);
    let m = &bg.model;
    let (dt, ds) = derivative_matrices(m);
    let g = st.form(&bg, 20.0, None).unwrap();
    let j = scalar_jacobian(m, &g, &dt, &ds);
    let v = m.grid_fn(|x, y| (x * y + 0.3 * x * x * y).sin());
    let jv = &j * nalgebra::DVector::from_column_slice(&v);
    let err = |h: f64| {
        let p: Vec<f64> = v.iter().map(|a| a * h).collect();
        let q: Vec<f64> = v.iter().map(|a| -a * h).collect();
        let sp = scalar_curvature(m, &st.form(&bg, 20.0, Some(&p)).unwrap());
        let sm = scalar_curvature(m, &st.form(&bg, 20.0, Some(&q)).unwrap());
        (0..m.len()).map(|n| ((sp[n] - sm[n]) / (2.0 * h) - jv[n]).abs()).fold(0.0, f64::max)
    };
    let (e1, e2) = (err(1e-3), err(5e-4));
    assert!((e1 / e2 - 4.0).abs() < 0.2, "{e1} {e2}");
}

#[test]
fn product_residual_vanishes() {
    let bg = setup(0);
    let (st, _) = rounds(&bg, Mode::Csck, 1);
    let f = extremal_residual(&bg, &st, 20.0, None, [0.0; 3]).unwrap();
    assert!(sup(&f) < 1e-9);
}

#[test]
fn newton_polish_hirzebruch() {
    let bg = setup(1);
    let (st, _) = rounds(&bg, Mode::Extremal, 2);
    let rep = newton_polish(&bg, &st, 20.0, &PolishOptions::default()).unwrap();
    assert!(rep.converged, "{:?}", rep.residuals);
    assert!(rep.residuals.len() - 1 <= 10);
    assert!(*rep.residuals.last().unwrap() <= 1e-9);
    // Started close: a single full step suffices.
    assert_eq!(rep.damping[0], 1.0);
}

#[test]
fn newton_polish_from_order_zero() {
    let bg = setup(1);
    let st = CorrectionState::new(&bg, Mode::Extremal);
    let rep = newton_polish(&bg, &st, 20.0, &PolishOptions::default()).unwrap();
    assert!(rep.converged, "{:?}", rep.residuals);
    let r = &rep.residuals;
    // Quadratic tail.
    assert!(r[r.len() - 1] < 1e-3 * r[r.len() - 2]);
}

#[test]
fn norm_probe_growth() {
    let bg = setup(1);
    let (st, _) = rounds(&bg, Mode::Extremal, 2);
    let p = norm_probe(&bg, &st, &round::LADDER).unwrap();
    assert!(p.slope <= 3.2 && p.slope > 1.5, "{}", p.slope);
    let bg0 = setup(0);
    let (st0, _) = rounds(&bg0, Mode::Csck, 2);
    let p0 = norm_probe(&bg0, &st0, &round::LADDER).unwrap();
    assert!((p0.slope - 2.0).abs() < 0.2, "{}", p0.slope);
}

#[test]
fn lipschitz_ratio_bounded() {
    let bg = setup(1);
    let (st, _) = rounds(&bg, Mode::Extremal, 2);
    let a = lipschitz_probe(&bg, &st, 20.0, 50, 1e-2, 11).unwrap();
    let b = lipschitz_probe(&bg, &st, 20.0, 50, 1e-3, 11).unwrap();
    assert!(a.ratios.iter().all(|v| v.is_finite() && *v > 0.0));
    assert!(a.max < 1e4 && b.max < 1e4);
    assert!((a.max / b.max - 1.0).abs() < 0.5, "{} {}", a.max, b.max);
    let z = vec![0.0; bg.model.len()];
    assert_eq!(remainder_ratio(&z, &z, &z, &z, &|v: &[f64]| sup(v)), 0.0);
}

#[test]
fn tau_lift_and_flow() {
    let bg = setup(1);
    let (st, _) = rounds(&bg, Mode::Extremal, 2);
    let m = &bg.model;
    let hb = bg.base_moment();
    let t = tau_lift(&bg, &st, 20.0, &hb, &vec![0.0; m.len()]).unwrap();
    let lift = m.pullback(&hb.iter().map(|v| 20.0 * v).collect::<Vec<_>>());
    assert!(sup(&t.lift.iter().zip(&lift).map(|(a, b)| a - b).collect::<Vec<_>>()) < 1e-12);
    let e1 = fibre_flow_check(&bg, &st, 20.0, 1e-2).unwrap();
    let e2 = fibre_flow_check(&bg, &st, 20.0, 5e-3).unwrap();
    assert!(e1 < 1e-4 && (e1 / e2 - 4.0).abs() < 0.2, "{e1} {e2}");
    let p2 = m.base_fn(|y| legendre(2, y).0);
    assert!(matches!(tau_lift(&bg, &st, 20.0, &p2, &vec![0.0; m.len()]), Err(CorrectionError::NotInLieAlgebra(_))));
}

#[test]
fn archive_roundtrip_and_resume() {
    let bg = setup(1);
    let (s1, _) = rounds(&bg, Mode::Extremal, 1);
    let text = save_state(&bg, &s1);
    let (bg2, back) = load_state(&text).unwrap();
    assert_eq!(back, s1);
    let (a, _) = correction_round(&bg, &s1, &RoundOptions::default()).unwrap();
    let (b, _) = correction_round(&bg2, &back, &RoundOptions::default()).unwrap();
    let gap = sup(&a.r_fields[1].iter().zip(&b.r_fields[1]).map(|(x, y)| x - y).collect::<Vec<_>>());
    assert!(gap < 1e-12);
    assert!(matches!(load_state("{}"), Err(CorrectionError::Archive(_))));
    let bad = text.replace("osclab-correction-state", "other");
    assert!(matches!(load_state(&bad), Err(CorrectionError::Archive(_))));
}

#[test]
fn alternative_orderings_run() {
    let bg = setup(1);
    let (s1, _) = rounds(&bg, Mode::Extremal, 1);
    let o = RoundOptions { steps: [Step::R, Step::E, Step::Base], ..Default::default() };
    let (_, rep) = correction_round(&bg, &s1, &o).unwrap();
    assert!(rep.exit.norms.iter().all(|v| v.is_finite()));
}
