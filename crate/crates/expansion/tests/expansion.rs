use osclab_expansion::linearize::{base_laplacian_apply, twisted_scalar};
use osclab_expansion::*;
use osclab_models::field::sup;
use osclab_models::*;
use osclab_relative::{build_potential_bundle, decompose};

fn model(d: i32, n: usize) -> ModelFibration {
    build_model(&ModelConfig::proj_bundle(d, n)).unwrap()
}

fn refs(m: &ModelFibration) -> (RelativeMetric, BaseMetric) {
    (reference_relative_metric(m), reference_base_metric(m))
}

fn perturbed(m: &ModelFibration) -> RelativeMetric {
    let phi = m.grid_fn(|x, y| 0.05 * (x * y + 0.3 * x * x * x - 0.2 * y * y * x));
    perturb_metric(m, &reference_relative_metric(m), &phi).unwrap()
}

#[test]
fn product_scalar_is_fibre_plus_scaled_base() {
    let m = model(0, 16);
    let (r, b) = refs(&m);
    for k in [1.0, 10.0] {
        let t = total_metric(&m, &r, &b, k, vec![]).unwrap();
        let s = exact_scalar(&m, &t);
        assert!(s.iter().all(|v| (v - (1.0 + 1.0 / k)).abs() < 1e-9));
    }
}

#[test]
fn hirzebruch_scalar_is_not_constant_but_close_to_expansion() {
    let m = model(1, 24);
    let (r, b) = refs(&m);
    let t = total_metric(&m, &r, &b, 50.0, vec![]).unwrap();
    let s = exact_scalar(&m, &t);
    let spread = s.iter().cloned().fold(f64::MIN, f64::max) - s.iter().cloned().fold(f64::MAX, f64::min);
    assert!(spread > 1e-3);
    let terms = expansion_terms(&m, &r, &b, Quantity::Scalar).unwrap();
    let pred = Term::Function(s).residual(&terms.order0, Some((&terms.order1, 50.0)));
    assert!(pred.sup() < 10.0 / 2500.0, "{}", pred.sup());
}

#[test]
fn product_terms_are_trivial() {
    let m = model(0, 16);
    let (r, b) = refs(&m);
    let t = expansion_terms(&m, &r, &b, Quantity::Scalar).unwrap();
    assert!(t.order0.as_function().unwrap().iter().all(|v| (v - 1.0).abs() < 1e-12));
    assert!(t.order1.as_function().unwrap().iter().all(|v| (v - 1.0).abs() < 1e-12));
    match expansion_terms(&m, &r, &b, Quantity::Ricci).unwrap().order1 {
        Term::Form(f) => assert!(f.sup() < 1e-12),
        _ => unreachable!(),
    }
}

#[test]
fn hirzebruch_order_one_scalar_projects_onto_momentum_potential() {
    let m = model(1, 24);
    let (r, b) = refs(&m);
    let s1 = scalar_order_one(&m, &r, &b).unwrap();
    let eb = build_potential_bundle(&m, &r).unwrap();
    let dec = decompose(&m, &r, &eb, &s1).unwrap();
    // p(S₁ − fibre mean) = −d x
    let x = m.grid_fn(|x, _| x);
    assert!(dec.e.iter().zip(&x).all(|(e, x)| (e + x).abs() < 1e-10));
    assert!(sup(&dec.r) < 1e-10);
}

#[test]
fn decay_slopes_through_order_one() {
    for d in [0, 1] {
        let m = model(d, 24);
        let (r, b) = refs(&m);
        let rp = perturbed(&m);
        let psi = m.grid_fn(|x, y| (x + 0.5 * y).sin());
        let beta = m.hessian(&m.grid_fn(|x, y| x * x * y + y * y));
        for omega in [&r, &rp] {
            for q in [Quantity::Scalar, Quantity::Ricci, Quantity::Laplacian(&psi), Quantity::Contraction(&beta)] {
                let rep = decay_fit(&m, omega, &b, q, 1, &LADDER).unwrap();
                assert!(rep.passes(), "d={d} {} slope {}", rep.quantity, rep.slope);
                assert!(rep.slope <= -1.85);
            }
        }
    }
}

#[test]
fn order_zero_fit_decays_like_one_over_k() {
    let m = model(1, 20);
    let (r, b) = refs(&m);
    let rep = decay_fit(&m, &r, &b, Quantity::Scalar, 0, &LADDER).unwrap();
    assert!((rep.slope + 1.0).abs() < 0.05, "{}", rep.slope);
    assert!(rep.interval.0 <= rep.slope && rep.slope <= rep.interval.1);
    assert!(rep.to_csv().starts_with("k,residual\n20,"));
}

#[test]
fn short_or_narrow_ladders_are_rejected() {
    let m = model(0, 12);
    let (r, b) = refs(&m);
    assert!(matches!(decay_fit(&m, &r, &b, Quantity::Scalar, 1, &[20.0, 40.0, 80.0]), Err(ExpansionError::Ladder(_))));
    assert!(matches!(decay_fit(&m, &r, &b, Quantity::Scalar, 1, &[20.0, 25.0, 30.0, 40.0]), Err(ExpansionError::Ladder(_))));
}

#[test]
fn non_positive_metric_at_smallest_k_is_reported() {
    let m = model(0, 12);
    let b = reference_base_metric(&m);
    let nu = m.base_fn(|y| -5.0 * 0.5 * (1.0 - y * y));
    let r = RelativeMetric::from_parts(&m, vec![0.0; m.ny()], vec![0.0; m.len()], nu).unwrap();
    let err = decay_fit(&m, &r, &b, Quantity::Scalar, 1, &[1.0, 2.0, 4.0, 8.0]).unwrap_err();
    assert!(matches!(err, ExpansionError::Model(ModelError::NotPositive { .. })), "{err:?}");
}

#[test]
fn order_one_on_product_vanishes() {
    let m = model(0, 16);
    let (r, b) = refs(&m);
    let o = solve_order_one(&m, &r, &b, OrderOneMode::Csck).unwrap();
    assert!(sup(&o.l1) == 0.0);
    assert!((o.c - 1.0).abs() < 1e-12);
}

#[test]
fn order_one_on_hirzebruch_needs_extremal_mode() {
    let m = model(1, 20);
    let (r, b) = refs(&m);
    assert!(matches!(solve_order_one(&m, &r, &b, OrderOneMode::Csck), Err(ExpansionError::Hypotheses { .. })));
    let o = solve_order_one(&m, &r, &b, OrderOneMode::Extremal).unwrap();
    // round fibres: S₁ has no R part, so l₁ vanishes and h₁ = −x
    assert!(sup(&o.l1) < 1e-10);
    assert!(sup(&o.h1) > 0.9);
    let lit = corrected_scalar_fit(&m, &r, &b, &o, &LADDER, false).unwrap();
    let ext = corrected_scalar_fit(&m, &r, &b, &o, &LADDER, true).unwrap();
    assert!(lit.slope > -1.2, "{}", lit.slope);
    assert!(ext.slope <= -1.85, "{}", ext.slope);
}

#[test]
fn vertical_solve_recovers_manufactured_solution() {
    for d in [0, 1] {
        let m = model(d, 20);
        let r = perturbed(&m);
        let r = if d == 0 { r } else { reference_relative_metric(&m) };
        let eb = build_potential_bundle(&m, &r).unwrap();
        // l* in R: remove fibre mean and E part
        let raw = m.grid_fn(|x, y| (1.3 * x).cos() * (1.0 + 0.4 * y) + x * x * x * y);
        let dec = decompose(&m, &r, &eb, &raw).unwrap();
        let lstar = dec.r;
        let psi = osclab_relative::fibrewise_lichnerowicz(&m, &r, &lstar);
        let (l, res) = solve_vertical(&m, &r, &eb, &psi).unwrap();
        assert!(res <= 1e-9);
        let err = sup(&osclab_models::field::sub(&l, &lstar)) / sup(&lstar);
        assert!(err < 1e-8, "d={d} err {err}");
        let (z, _) = solve_vertical(&m, &r, &eb, &vec![0.0; m.len()]).unwrap();
        assert!(z.iter().all(|v| *v == 0.0));
    }
}

#[test]
fn assembled_pl1_properties() {
    for d in [0, 1] {
        let m = model(d, 20);
        let (r, b) = refs(&m);
        let eb = build_potential_bundle(&m, &r).unwrap();
        let op = assemble_pl1(&m, &r, &b, &eb, 6, 3).unwrap();
        assert!(op.asymmetry <= 1e-10);
        assert!(op.spectrum[0] > -1e-10 * op.spectrum.last().unwrap());
        assert_eq!(op.nullity, split_oracle(d), "d = {d}");
        let n = op.invariant_indices().len();
        let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..5)
            .map(|s| {
                let c = (0..n).map(|i| ((i * 7 + s * 3) % 5) as f64 - 2.0).collect();
                let e = (0..n).map(|i| ((i * 3 + s) % 4) as f64 - 1.5).collect();
                (c, e)
            })
            .collect();
        assert!(quadratic_form_gap(&m, &r, &eb, &op, &pairs) <= 1e-8);
        assert!(op.spectrum_csv().lines().count() == op.basis.len() + 1);
    }
}

/// `Σ h⁰(O(d_j − d_i)) − 1` for `O ⊕ O(d)`.
fn split_oracle(d: i32) -> usize {
    let degs = [0, d];
    let mut n = 0;
    for a in degs {
        for c in degs {
            n += (c - a + 1).max(0) as usize;
        }
    }
    n - 1
}

#[test]
fn small_basis_is_rejected() {
    let m = model(0, 12);
    let (r, b) = refs(&m);
    let eb = build_potential_bundle(&m, &r).unwrap();
    assert!(matches!(assemble_pl1(&m, &r, &b, &eb, 3, 1), Err(ExpansionError::BasisTooSmall(3))));
}

#[test]
fn symbol_of_pl1() {
    let m = model(0, 24);
    let (r, b) = refs(&m);
    let eb = build_potential_bundle(&m, &r).unwrap();
    let s = pl1_symbol_check(&m, &r, &b, &eb, &[6, 8, 10]);
    assert!(s.plateau <= 0.05, "{s:?}");
    assert!((s.doubling / 4.0 - 1.0).abs() <= 0.10, "{s:?}");
    // x is a global potential on the product
    assert!(s.constant_form.abs() < 1e-20);
}

#[test]
fn twisted_lichnerowicz_on_round_base() {
    let m = model(0, 20);
    let b = reference_base_metric(&m);
    let y1 = m.base_fn(|y| y);
    let z = twisted_lichnerowicz_apply(&m, &b, None, &y1).unwrap();
    assert!(sup(&z) < 1e-11);
    // Δ P₂ = 3 P₂, D*D P₂ = (9 − 3) P₂
    let p2 = m.base_fn(|y| 0.5 * (3.0 * y * y - 1.0));
    let l = twisted_lichnerowicz_apply(&m, &b, None, &p2).unwrap();
    assert!(l.iter().zip(&p2).all(|(a, p)| (a + 6.0 * p).abs() < 1e-10));
    let lap = base_laplacian_apply(&m, &b, &p2);
    assert!(lap.iter().zip(&p2).all(|(a, p)| (a - 3.0 * p).abs() < 1e-11));
}

#[test]
fn twisted_lichnerowicz_matches_finite_differences() {
    let m = model(0, 20);
    let b = reference_base_metric(&m);
    let eps = 0.3;
    let alpha_d: Vec<f64> = b.g.iter().map(|g| eps * g).collect();
    let mut alpha = TwoFormField::zeros(m.len());
    alpha.add_pullback(&m, &alpha_d);
    let phi = m.base_fn(|y| 0.5 * (3.0 * y * y - 1.0) + 0.3 * y * y * y * y);
    let l = twisted_lichnerowicz_apply(&m, &b, Some(&alpha), &phi).unwrap();
    let t = 1e-4;
    let plus = twisted_scalar(&m, &b, &alpha_d, &phi.iter().map(|v| t * v).collect::<Vec<_>>()).unwrap();
    let minus = twisted_scalar(&m, &b, &alpha_d, &phi.iter().map(|v| -t * v).collect::<Vec<_>>()).unwrap();
    let fd: Vec<f64> = plus.iter().zip(&minus).map(|(a, c)| (a - c) / (2.0 * t)).collect();
    let gap = sup(&osclab_models::field::sub(&fd, &l)) / sup(&l);
    assert!(gap < 1e-6, "{gap}");
    let l0 = twisted_lichnerowicz_apply(&m, &b, None, &phi).unwrap();
    assert!(sup(&osclab_models::field::sub(&l, &l0)) > 1e-3);
}

#[test]
fn twist_must_be_a_base_form() {
    let m = model(0, 12);
    let b = reference_base_metric(&m);
    let mut alpha = TwoFormField::zeros(m.len());
    alpha.ss[5] = 0.1;
    let phi = m.base_fn(|y| y * y);
    assert!(matches!(twisted_lichnerowicz_apply(&m, &b, Some(&alpha), &phi), Err(ExpansionError::NotBaseForm(_))));
}

#[test]
fn linearization_probes() {
    let ks = [40.0, 80.0, 160.0];
    for d in [0, 1] {
        let m = model(d, 20);
        let (r, b) = refs(&m);
        let o = solve_order_one(&m, &r, &b, OrderOneMode::Extremal).unwrap();
        let f = m.base_fn(|y| 0.5 * (3.0 * y * y - 1.0) + 0.2 * y * y * y);
        let pb = linearization_probe(&m, &r, &b, &o, &ProbeDirection::Base(f), &ks).unwrap();
        assert!(pb.worst_slope() <= -0.85, "{pb:?}");
        assert!(pb.reality <= 1e-8);
        let eb = build_potential_bundle(&m, &r).unwrap();
        let pf = linearization_probe(&m, &r, &b, &o, &ProbeDirection::Fibre(e_sections(&m, &eb, 3)), &ks).unwrap();
        assert!(pf.worst_slope() <= -0.85, "{pf:?}");
        assert!(pf.identities[0].1[2] < 0.05);
    }
}

#[test]
fn fd_step_window() {
    let m = model(0, 12);
    let (r, b) = refs(&m);
    let v = m.grid_fn(|x, _| x);
    assert!(matches!(fd_linearization(&m, &r, &b, 10.0, None, &v, 0.5), Err(ExpansionError::FdStep(_))));
}

#[test]
fn l1_is_unchanged_by_potential_perturbations() {
    let ks = [40.0, 80.0, 160.0];
    let m = model(1, 20);
    let (r, b) = refs(&m);
    let eb = build_potential_bundle(&m, &r).unwrap();
    let secs = e_sections(&m, &eb, 3);
    let zero = l1_perturbation_invariance(&m, &r, &b, &vec![0.0; m.len()], &secs, &ks).unwrap();
    assert!(zero.differences.iter().all(|v| *v == 0.0));
    let o = solve_order_one(&m, &r, &b, OrderOneMode::Extremal).unwrap();
    let with_l1 = l1_perturbation_invariance(&m, &r, &b, &o.l1, &secs, &ks).unwrap();
    assert!(with_l1.differences.iter().all(|v| *v < 1e-6));
    let phi = m.grid_fn(|x, y| 0.05 * (x * y + 0.3 * x * x * x - 0.2 * y * y * x) + 0.1 * y * y);
    let rand = l1_perturbation_invariance(&m, &r, &b, &phi, &secs, &ks).unwrap();
    assert!(rand.slope <= -0.85, "{rand:?}");
}
