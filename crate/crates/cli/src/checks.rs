//! Check groups on a single model.  Each returns its records plus any
//! CSV artifacts; nothing here touches the filesystem.

use std::f64::consts::PI;

use osclab_correction::{
    correct_to, lipschitz_probe, newton_polish, norm_probe, save_state, Background, CorrectionState, Mode,
    PolishOptions, RoundOptions,
};
use osclab_expansion::{
    assemble_pl1, corrected_scalar_fit, decay_fit, e_sections, linearization_probe, quadratic_form_gap,
    solve_order_one, OrderOneMode, ProbeDirection, Quantity,
};
use osclab_hermite::{equivalence_gap, he_flow, he_residual, FlowOptions, HermitianMetric};
use osclab_models::export::{base_csv, field_csv};
use osclab_models::field::sup;
use osclab_models::metric::positivity_margin;
use osclab_models::spectral::{diff_matrix, legendre};
use osclab_models::{
    perturb_metric, reference_base_metric, reference_relative_metric, total_metric, ModelFibration, ModelKind,
    RelativeMetric,
};
use osclab_osc::{aut_invariance_check, esc_residual, osc_residual, osc_solve, Automorphism, SolveOptions, SolveTarget};
use osclab_relative::fibre::{apply, fibre_operators};
use osclab_relative::{
    build_potential_bundle, curvature_data, decompose, horizontal_part, symplectic_curvature,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{OscTarget, Slopes, Tolerances};
use crate::error::{CliError, Context};
use crate::report::{Check, Observation};

#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub observations: Vec<Observation>,
    /// `(file name, contents)`.
    pub files: Vec<(String, String)>,
}

impl Outcome {
    fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    fn observe(&mut self, name: impl Into<String>, value: f64) {
        self.observations.push(Observation { name: name.into(), value });
    }

    fn file(&mut self, name: impl Into<String>, contents: String) {
        self.files.push((name.into(), contents));
    }

    pub fn merge(&mut self, other: Outcome) {
        self.checks.extend(other.checks);
        self.observations.extend(other.observations);
        self.files.extend(other.files);
    }

    /// Prefixes every name, keeping suite records distinct.
    pub fn prefixed(mut self, p: &str) -> Outcome {
        for c in &mut self.checks {
            c.name = format!("{p} {}", c.name);
        }
        for o in &mut self.observations {
            o.name = format!("{p} {}", o.name);
        }
        for f in &mut self.files {
            f.0 = format!("{}_{}", p.replace(' ', "_"), f.0);
        }
        self
    }
}

/// Short model name used in check names and file names.
pub fn label(m: &ModelFibration) -> String {
    match m.kind {
        ModelKind::Product => "product".into(),
        ModelKind::ProjBundle => format!("f{}", m.d),
    }
}

fn gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// A smooth non-round relative metric used by the identity checks.
fn generic_metric(m: &ModelFibration, eps: f64) -> Result<RelativeMetric, CliError> {
    perturb_metric(m, &reference_relative_metric(m), &m.grid_fn(|x, y| eps * (x * x * x + x * y + 0.5 * x * x)))
        .context("perturbed metric")
}

/// Round fibres moved by a fibrewise boost.
fn shifted_round(m: &ModelFibration) -> Result<RelativeMetric, CliError> {
    RelativeMetric::from_parts(m, m.base_fn(|y| 0.4 * y), vec![0.0; m.len()], vec![0.0; m.ny()]).context("shifted metric")
}

pub fn model_validate(m: &ModelFibration, ladder: &[f64], tol: &Tolerances) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    let b = reference_base_metric(m);
    for (name, r) in [("reference", reference_relative_metric(m)), ("perturbed", generic_metric(m, 0.02)?)] {
        out.check(Check::le(format!("{name} closedness"), r.form.closedness_residual(m), tol.closedness));
        out.check(Check::le(format!("{name} fibre volume spread"), r.volume_spread(), tol.volume_spread));
        let c = curvature_data(m, &r).context("curvature")?;
        out.check(Check::le(format!("{name} chart gap"), c.chart_gap, tol.chart_gap));
        let t = total_metric(m, &r, &b, ladder[0], vec![]).context("total metric")?;
        out.check(Check::ge(format!("{name} positivity margin at k={}", ladder[0]), positivity_margin(m, &t.form).0, 0.0));
    }
    out.observe("nodes", m.len() as f64);
    out.file("reference_potential.csv", field_csv(m, &reference_relative_metric(m).potential));
    Ok(out)
}

/// Minimal coupling, direct image, fibre Ricci and decomposition checks.
pub fn operator_identities(m: &ModelFibration, tol: &Tolerances) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    let eps = if m.kind == ModelKind::Product { 0.05 } else { 0.03 };
    let r = generic_metric(m, eps)?;
    let sc = symplectic_curvature(m, &r);
    let back: Vec<f64> = sc.mu_f.iter().zip(m.pullback(&sc.beta)).map(|(a, b)| a + b).collect();
    out.check(Check::le("minimal coupling reconstruction", gap(&back, &horizontal_part(&r)), tol.coupling));
    out.check(Check::le("direct image of mu*F", sup(&r.fibre_integral(m, &sc.mu_f)), tol.direct_image));

    let c = curvature_data(m, &r).context("curvature")?;
    let nx = m.nx();
    let mut worst = 0.0f64;
    for j in 0..m.ny() {
        let ops = fibre_operators(m, &r, j, 0);
        for i in 0..nx {
            let n = j * nx + i;
            worst = worst.max((c.rho_v[n] - ops.scalar[i] * r.form.ss[n]).abs());
        }
    }
    out.check(Check::le("rho on fibres = fibre Ricci", worst, tol.fibre_ricci));

    let eb = build_potential_bundle(m, &r).context("potential bundle")?;
    let phi = m.grid_fn(|x, y| (2.0 * x + y).sin() + x.powi(4) * y);
    let dec = decompose(m, &r, &eb, &phi).context("decompose")?;
    let mut orth = [&dec.e, &dec.r].iter().map(|f| sup(&r.fibre_integral(m, f)) / r.volume).fold(0.0, f64::max);
    let h = eb.invariant_potential();
    for j in 0..m.ny() {
        let row = |f: &[f64]| f[j * nx..(j + 1) * nx].to_vec();
        let (rr, hh) = (row(&dec.r), row(h));
        let norm = (r.fibre_dot(m, j, &rr, &rr) * r.fibre_dot(m, j, &hh, &hh)).sqrt().max(f64::MIN_POSITIVE);
        orth = orth.max(r.fibre_dot(m, j, &rr, &hh).abs() / norm);
    }
    out.check(Check::le("decomposition orthogonality", orth, tol.orthogonality));
    out.check(Check::le("decomposition reconstruction", gap(&dec.reconstruct(m), &phi) / sup(&phi), tol.orthogonality));
    Ok(out)
}

/// Lowest eigenvalue of the round-sphere Laplacian, from the Legendre
/// equation on the fibre nodes: `−½ ((1−x²) P₁')' = λ P₁`.
pub fn round_sphere_oracle(m: &ModelFibration) -> f64 {
    let x = m.x();
    let d = diff_matrix(x);
    let n = x.len();
    let p1: Vec<f64> = x.iter().map(|&t| legendre(1, t).0).collect();
    let flux: Vec<f64> = (0..n).map(|i| (1.0 - x[i] * x[i]) * (0..n).map(|k| d[(i, k)] * p1[k]).sum::<f64>()).collect();
    let lap: Vec<f64> = (0..n).map(|i| -0.5 * (0..n).map(|k| d[(i, k)] * flux[k]).sum::<f64>()).collect();
    let num: f64 = lap.iter().zip(&p1).map(|(a, b)| a * b).sum();
    let den: f64 = p1.iter().map(|b| b * b).sum();
    num / den
}

/// `Δ_V h = h` for every basis potential on round fibres.
pub fn fano_eigenvalue(m: &ModelFibration, tol: &Tolerances) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    let lambda = round_sphere_oracle(m);
    out.check(Check::le("round-sphere oracle eigenvalue", (lambda - 1.0).abs(), tol.oracle));
    for (name, r) in [("reference", reference_relative_metric(m)), ("boosted", shifted_round(m)?)] {
        let eb = build_potential_bundle(m, &r).context("potential bundle")?;
        let nx = m.nx();
        let (mut worst, mut scalar) = (0.0f64, 0.0f64);
        for (basis, &b) in eb.basis.iter().zip(&eb.modes) {
            for j in 0..m.ny() {
                let ops = fibre_operators(m, &r, j, b);
                scalar = scalar.max(ops.scalar.iter().fold(0.0f64, |a, s| a.max((s - 1.0).abs())));
                let h = &basis[j * nx..(j + 1) * nx];
                let e: Vec<f64> = apply(&ops.laplacian, h).iter().zip(h).map(|(a, v)| a - lambda * v).collect();
                worst = worst.max((ops.dot(m, &e, &e) / ops.dot(m, h, h)).sqrt());
            }
        }
        out.check(Check::le(format!("{name} fibre scalar curvature = 1"), scalar, tol.fano));
        out.check(Check::le(format!("{name} |Delta_V h - h| / |h|"), worst, tol.fano));
        out.observe(format!("{name} bundle rank"), eb.rank as f64);
    }
    Ok(out)
}

/// Random smooth starting weights `Σ_{l≤3} c_l P_l(y)`.
fn seeded_weights(m: &ModelFibration, degrees: &[i32], seed: u64) -> HermitianMetric {
    let b = reference_base_metric(m);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h = HermitianMetric::standard(m, degrees, &b);
    for u in h.weights.iter_mut() {
        let c: Vec<f64> = (0..3).map(|_| rng.gen_range(-0.2..0.2)).collect();
        *u = m.base_fn(|y| (1..=3).map(|l| c[l - 1] * legendre(l, y).0).sum());
    }
    h
}

/// Hermite–Einstein flow from seeded weights.
pub fn he_solve(
    m: &ModelFibration,
    degrees: &[i32],
    seed: u64,
    tol: &Tolerances,
) -> Result<(Outcome, HermitianMetric), CliError> {
    let mut out = Outcome::default();
    let h0 = seeded_weights(m, degrees, seed);
    let (h, trace) = he_flow(m, &h0, &FlowOptions { tol: tol.he, ..Default::default() }).context("he_flow")?;
    let slopes = h.slopes(m);
    let flow_res = h
        .mean_curvature(m)
        .iter()
        .zip(&slopes)
        .map(|(f, mu)| f.iter().fold(0.0f64, |a, v| a.max((v - mu).abs())))
        .fold(0.0, f64::max);
    out.check(Check::le("he flow residual", flow_res, tol.he));
    let deg_err = h.degrees_by_quadrature(m).iter().zip(degrees).fold(0.0f64, |a, (q, d)| a.max((q - *d as f64).abs()));
    out.check(Check::le("he degrees by quadrature", deg_err, tol.degree));
    out.observe("he flow steps", trace.steps as f64);
    let rep = he_residual(m, &h);
    out.observe("he lambda", rep.lambda);
    out.observe("he trace degree", rep.trace_degree);
    for (i, s) in rep.slopes.iter().enumerate() {
        out.observe(format!("he slope {i}"), *s);
    }
    let cols: Vec<&[f64]> = h.weights.iter().map(|u| u.as_slice()).collect();
    let names: Vec<String> = (0..cols.len()).map(|i| format!("u{i}")).collect();
    let names: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    out.file("he_weights.csv", base_csv(m, &names, &cols));
    let mut flow = String::from("step,residual\n");
    for (i, r) in trace.residuals.iter().enumerate() {
        flow.push_str(&format!("{},{r:e}\n", i + 1));
    }
    out.file("he_flow.csv", flow);
    Ok((out, h))
}

/// Hermite–Einstein flow and its equivalence with the OSC residual.
pub fn he_equivalence(m: &ModelFibration, degrees: &[i32], seed: u64, tol: &Tolerances) -> Result<Outcome, CliError> {
    let (mut out, h) = he_solve(m, degrees, seed, tol)?;

    let eq = equivalence_gap(m, &h).context("equivalence_gap")?;
    out.check(Check::le("equivalence gap", eq.gap, tol.equivalence));

    let omega = osclab_hermite::induced_relative_metric(m, &h).context("induced metric")?;
    let eb = build_potential_bundle(m, &omega).context("potential bundle")?;
    let esc = esc_residual(m, &omega, &h.base, &eb, tol.esc).context("esc_residual")?;
    out.check(Check::le("esc residual", esc.norm, tol.esc));

    let osc = osc_residual(m, &omega, &h.base, &eb).context("osc_residual")?;
    let p = eb.invariant_potential();
    let w = m.tensor_weights();
    let num: f64 = (0..p.len()).map(|n| w[n] * osc.raw[n] * p[n]).sum();
    let den: f64 = (0..p.len()).map(|n| w[n] * p[n] * p[n]).sum();
    let c = if den > 0.0 { num / den } else { 0.0 };
    let complement: Vec<f64> = osc.raw.iter().zip(p).map(|(a, q)| a - c * q).collect();
    out.check(Check::le("osc residual complement to momentum potential", sup(&complement), tol.osc_complement));
    out.observe("osc momentum coefficient", c);

    out.file("osc_field.csv", field_csv(m, &osc.field));
    Ok(out)
}

/// Expansion residual slopes through order one.
pub fn expansion_orders(m: &ModelFibration, ladder: &[f64], slopes: &Slopes) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    let b = reference_base_metric(m);
    let phi = m.grid_fn(|x, y| 0.05 * (x * y + 0.3 * x * x * x - 0.2 * y * y * x));
    let rp = perturb_metric(m, &reference_relative_metric(m), &phi).context("perturbed metric")?;
    let psi = m.grid_fn(|x, y| (x + 0.5 * y).sin());
    let beta = m.hessian(&m.grid_fn(|x, y| x * x * y + y * y));
    for (name, omega) in [("reference", reference_relative_metric(m)), ("perturbed", rp)] {
        for (qname, q) in [
            ("contraction", Quantity::Contraction(&beta)),
            ("laplacian", Quantity::Laplacian(&psi)),
            ("ricci", Quantity::Ricci),
            ("scalar", Quantity::Scalar),
        ] {
            let rep = decay_fit(m, &omega, &b, q, 1, ladder).context("decay_fit")?;
            out.check(Check::le(format!("{name} {qname} slope"), rep.slope, slopes.expansion));
            out.file(format!("expansion_{name}_{qname}.csv"), rep.to_csv());
        }
    }
    Ok(out)
}

/// Scalar curvature after the order-one correction.  The literal reading
/// is recorded; the check removes the order-one holomorphy potential.
pub fn corrected_scalar(m: &ModelFibration, ladder: &[f64], slopes: &Slopes) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    let (r, b) = (reference_relative_metric(m), reference_base_metric(m));
    let o = solve_order_one(m, &r, &b, OrderOneMode::Extremal).context("solve_order_one")?;
    let lit = corrected_scalar_fit(m, &r, &b, &o, ladder, false).context("corrected_scalar_fit")?;
    let ext = corrected_scalar_fit(m, &r, &b, &o, ladder, true).context("corrected_scalar_fit")?;
    out.observe("corrected scalar literal slope", lit.slope);
    out.observe("order-one potential sup", sup(&o.h1));
    out.check(Check::le("corrected scalar slope modulo h1", ext.slope, slopes.corrected));
    out.file("corrected_scalar.csv", ext.to_csv());
    Ok(out)
}

/// `Σ h⁰(O(d_j − d_i)) − 1` for `O ⊕ O(d)`.
pub fn endomorphism_count(d: i32) -> usize {
    let degs = [0, d];
    let n: i32 = degs.iter().flat_map(|a| degs.iter().map(move |c| (c - a + 1).max(0))).sum();
    n as usize - 1
}

/// Assembled `p∘L₁`: symmetry, semi-definiteness, nullity and the
/// quadratic form against a grid evaluation.
pub fn pl1_properties(
    m: &ModelFibration,
    degree: usize,
    modes: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    let (r, b) = (reference_relative_metric(m), reference_base_metric(m));
    let eb = build_potential_bundle(m, &r).context("potential bundle")?;
    let op = assemble_pl1(m, &r, &b, &eb, degree, modes as i32).context("assemble_pl1")?;
    let top = op.spectrum.last().copied().unwrap_or(1.0).abs().max(f64::MIN_POSITIVE);
    out.check(Check::le("pL1 asymmetry", op.asymmetry, tol.symmetry));
    out.check(Check::le("pL1 negative part", -op.spectrum[0] / top, tol.psd));
    out.check(Check::eq("pL1 nullity", op.nullity as f64, endomorphism_count(m.d) as f64));
    let n = op.invariant_indices().len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..5)
        .map(|_| {
            let c = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let e = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            (c, e)
        })
        .collect();
    out.check(Check::le("pL1 quadratic form gap", quadratic_form_gap(m, &r, &eb, &op, &pairs), tol.quadratic_form));
    out.file("pl1_spectrum.csv", op.spectrum_csv());
    Ok(out)
}

fn probes(m: &ModelFibration, ks: &[f64]) -> Result<Vec<osclab_expansion::ProbeReport>, CliError> {
    let (r, b) = (reference_relative_metric(m), reference_base_metric(m));
    let o = solve_order_one(m, &r, &b, OrderOneMode::Extremal).context("solve_order_one")?;
    let f = m.base_fn(|y| 0.5 * (3.0 * y * y - 1.0) + 0.2 * y * y * y);
    let eb = build_potential_bundle(m, &r).context("potential bundle")?;
    let base = linearization_probe(m, &r, &b, &o, &ProbeDirection::Base(f), ks).context("linearization_probe")?;
    let fibre = linearization_probe(m, &r, &b, &o, &ProbeDirection::Fibre(e_sections(m, &eb, 3)), ks)
        .context("linearization_probe")?;
    Ok(vec![base, fibre])
}

/// Finite-difference agreement slopes of the linearization identities.
pub fn linearization_identities(m: &ModelFibration, ks: &[f64], slopes: &Slopes) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    for rep in probes(m, ks)? {
        for (name, errs, slope) in &rep.identities {
            out.check(Check::le(format!("{name} slope"), *slope, slopes.linearization));
            for (k, e) in ks.iter().zip(errs) {
                out.observe(format!("{name} error at k={k}"), *e);
            }
        }
    }
    Ok(out)
}

/// Imaginary part of the invariant-restricted linearization.
pub fn reality(m: &ModelFibration, ks: &[f64], tol: &Tolerances) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    let worst = probes(m, ks)?.iter().map(|p| p.reality).fold(0.0, f64::max);
    out.check(Check::le("linearization imaginary part", worst, tol.reality));
    Ok(out)
}

/// OSC residual under base-form shifts and relative automorphisms.
pub fn invariance(m: &ModelFibration, tol: &Tolerances) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    let b = reference_base_metric(m);
    let r = perturb_metric(m, &reference_relative_metric(m), &m.grid_fn(|x, y| 0.01 * (x * x * x + x * y * y)))
        .context("perturbed metric")?;
    let res = |w: &RelativeMetric| -> Result<Vec<f64>, CliError> {
        let eb = build_potential_bundle(m, w).context("potential bundle")?;
        Ok(osc_residual(m, w, &b, &eb).context("osc_residual")?.field)
    };
    let shifted = r.with_nu(m, m.base_fn(|y| 0.2 * (1.0 - y * y))).context("base form shift")?;
    out.check(Check::le("osc residual under base form shift", gap(&res(&r)?, &res(&shifted)?), tol.invariance));
    for (name, g) in [
        ("fibre rotation", Automorphism::FibreRotation(PI / 5.0)),
        ("boost 0.3", Automorphism::Boost(0.3)),
        ("boost -0.2", Automorphism::Boost(-0.2)),
    ] {
        let rep = aut_invariance_check(m, &r, &b, g).context("aut_invariance_check")?;
        out.check(Check::le(format!("osc residual under {name}"), rep.gap, tol.invariance));
    }
    Ok(out)
}

/// OSC and ESC residuals of a perturbed reference metric.
pub fn osc_report(m: &ModelFibration, amplitude: f64, tol: &Tolerances) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    let b = reference_base_metric(m);
    let r = perturb_metric(m, &reference_relative_metric(m), &m.grid_fn(|x, y| amplitude * x * (y + 0.5 * y * y)))
        .context("perturbed metric")?;
    let eb = build_potential_bundle(m, &r).context("potential bundle")?;
    let osc = osc_residual(m, &r, &b, &eb).context("osc_residual")?;
    let esc = esc_residual(m, &r, &b, &eb, tol.esc).context("esc_residual")?;
    out.check(Check::le("osc residual fibre mean", sup(&r.fibre_integral(m, &osc.field)) / r.volume, tol.direct_image));
    out.observe("osc residual sup", osc.sup);
    out.observe("esc residual", esc.norm);
    out.file("osc_field.csv", field_csv(m, &osc.field));
    out.file("esc_field.csv", field_csv(m, &esc.field));
    out.merge(invariance(m, tol)?);
    Ok(out)
}

/// Solves for an OSC (or ESC) from a perturbed reference metric.
pub fn osc_solve_run(m: &ModelFibration, target: OscTarget, amplitude: f64, tol: &Tolerances) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    let b = reference_base_metric(m);
    let r = perturb_metric(m, &reference_relative_metric(m), &m.grid_fn(|x, y| amplitude * x * (y + 0.5 * y * y)))
        .context("perturbed metric")?;
    let target = match target {
        OscTarget::Osc => SolveTarget::Osc,
        OscTarget::Esc => SolveTarget::Esc,
    };
    let (w, trace) = osc_solve(m, &r, &b, &SolveOptions { target, tol: tol.osc_solve, ..Default::default() })
        .context("osc_solve")?;
    let last = trace.residuals.last().copied().unwrap_or(0.0);
    out.check(Check::le("osc_solve final residual", last, tol.osc_solve));
    out.observe("osc_solve iterations", trace.iterations as f64);
    let mut s = String::from("iteration,residual,step\n");
    for (i, r) in trace.residuals.iter().enumerate() {
        s.push_str(&format!("{i},{r:e},{:e}\n", trace.steps.get(i).copied().unwrap_or(0.0)));
    }
    out.file("osc_solve_trace.csv", s);
    out.file("solution_shift.csv", base_csv(m, &["shift"], &[&w.shift]));
    out.file("solution_potential.csv", field_csv(m, &w.potential));
    Ok(out)
}

pub fn background(m: &ModelFibration) -> Result<Background, CliError> {
    Background::new(m, &reference_relative_metric(m), &reference_base_metric(m)).context("background")
}

/// Correction rounds up to `orders` with their decay slopes.
pub fn correction(
    bg: &Background,
    mode: Mode,
    ladder: &[f64],
    orders: usize,
    slopes: &Slopes,
) -> Result<(Outcome, CorrectionState), CliError> {
    let mut out = Outcome::default();
    let opts = RoundOptions { ks: ladder.to_vec(), ..Default::default() };
    let (state, reports) = correct_to(bg, &CorrectionState::new(bg, mode), orders, &opts).context("correct_to")?;
    let mut table = String::from("order,k,residual\n");
    for rep in &reports {
        let r = rep.order;
        out.check(Check::le(format!("round {r} residual slope"), rep.exit.slope, slopes.rounds[r - 1]));
        out.observe(format!("round {r} kappa"), rep.kappa);
        out.observe(format!("round {r} constant drift"), rep.drift);
        for (k, v) in rep.exit.ks.iter().zip(&rep.exit.norms) {
            table.push_str(&format!("{r},{k},{v:e}\n"));
        }
    }
    out.file("decay.csv", table);
    out.file("state.json", save_state(bg, &state));
    Ok((out, state))
}

pub fn polish(
    bg: &Background,
    state: &CorrectionState,
    k: f64,
    max_steps: usize,
    tol: &Tolerances,
) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    let rep = newton_polish(bg, state, k, &PolishOptions { max_steps, tol: tol.newton }).context("newton_polish")?;
    let last = rep.residuals.last().copied().unwrap_or(f64::INFINITY);
    out.check(Check::le(format!("newton residual at k={k}"), last, tol.newton));
    out.check(Check::le("newton steps", (rep.residuals.len() - 1) as f64, max_steps as f64));
    let mut s = String::from("step,residual,damping\n");
    for (i, r) in rep.residuals.iter().enumerate() {
        s.push_str(&format!("{i},{r:e},{}\n", rep.damping.get(i).copied().unwrap_or(0.0)));
    }
    out.file("newton.csv", s);
    out.file("newton_potential.csv", field_csv(&bg.model, &rep.psi));
    Ok(out)
}

pub fn norms(bg: &Background, state: &CorrectionState, ladder: &[f64], slopes: &Slopes) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    let p = norm_probe(bg, state, ladder).context("norm_probe")?;
    out.check(Check::le("inverse norm growth slope", p.slope, slopes.inverse_norm));
    let mut s = String::from("k,inverse_norm\n");
    for (k, v) in p.ks.iter().zip(&p.inverse_norms) {
        s.push_str(&format!("{k},{v:e}\n"));
    }
    out.file("norms.csv", s);
    Ok(out)
}

pub fn lipschitz(
    bg: &Background,
    state: &CorrectionState,
    k: f64,
    pairs: usize,
    radius: f64,
    seed: u64,
    tol: &Tolerances,
) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    let rep = lipschitz_probe(bg, state, k, pairs, radius, seed).context("lipschitz_probe")?;
    let finite = rep.ratios.iter().all(|v| v.is_finite());
    out.check(Check::le("lipschitz ratio max", if finite { rep.max } else { f64::INFINITY }, tol.lipschitz));
    let mut s = String::from("pair,ratio\n");
    for (i, r) in rep.ratios.iter().enumerate() {
        s.push_str(&format!("{i},{r:e}\n"));
    }
    out.file("lipschitz.csv", s);
    Ok(out)
}
