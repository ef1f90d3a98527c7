//! Heuristic fibrewise iteration towards optimal (or extremal) symplectic
//! connections.
//!
//! The relative metric is kept as `κ ω_ref(a) + i∂∂̄φ + π*ν`.  Moving along
//! a section `c·h` of `E` is, to first order, the fibrewise automorphism
//! that changes the shift `a` by `−c/κ`, so updates act on `a` and the
//! fibres stay exactly round.  Between steps the fibres are renormalized:
//! the `E` part of `φ` is absorbed into `a` and the `R` part is driven to a
//! fibrewise cscK metric by Newton steps with `D*D`.

use nalgebra::{DMatrix, DVector};
use osclab_models::field::sup;
use osclab_models::{BaseMetric, ModelFibration, RelativeMetric};
use osclab_relative::fibre::fibre_operators;
use osclab_relative::{build_potential_bundle, decompose};

use crate::error::OscError;
use crate::residual::{esc_residual, osc_residual};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveTarget {
    Osc,
    Esc,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub target: SolveTarget,
    pub tol: f64,
    pub max_iter: usize,
    /// Initial step; halved on failure, doubled (up to this value) on
    /// success.
    pub step: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { target: SolveTarget::Osc, tol: 1e-7, max_iter: 500, step: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolveTrace {
    pub iterations: usize,
    pub residuals: Vec<f64>,
    pub steps: Vec<f64>,
    pub converged: bool,
}

/// Absorbs the `E` part of the potential into the shift and makes every
/// fibre cscK.
pub fn normalize_fibres(model: &ModelFibration, omega: &RelativeMetric) -> Result<RelativeMetric, OscError> {
    let nx = model.nx();
    let mut w = omega.clone();
    for _ in 0..30 {
        let eb = build_potential_bundle(model, &w)?;
        let dec = decompose(model, &w, &eb, &w.potential)?;
        let c = eb.coefficients(model, &w, &w.potential)?;
        let shift: Vec<f64> = (0..model.ny()).map(|j| w.shift[j] - c[j][0] / w.scale).collect();
        // φ_E ≈ κ(1 + x_a)δa: drop it together with its pullback part
        let pb = model.pullback(&c.iter().map(|v| v[0]).collect::<Vec<_>>());
        let mut phi: Vec<f64> = (0..model.len()).map(|n| w.potential[n] - dec.e[n] - pb[n]).collect();
        w = w.with_parts(model, shift, phi.clone())?;
        // one Newton step towards constant fibre scalar curvature
        let mut worst = 0.0f64;
        for j in 0..model.ny() {
            let ops = fibre_operators(model, &w, j, 0);
            let wts = ops.l2_weights(model);
            let vol: f64 = wts.iter().sum();
            let mean = ops.scalar.iter().zip(&wts).map(|(s, w)| s * w).sum::<f64>() / vol;
            let r: Vec<f64> = ops.scalar.iter().map(|s| s - mean).collect();
            worst = worst.max(sup(&r));
            let h = &eb.basis[0][j * nx..(j + 1) * nx];
            let scale = ops.lichnerowicz.amax();
            let m = DMatrix::from_fn(nx + 2, nx, |i, k| match i {
                i if i < nx => ops.lichnerowicz[(i, k)],
                i if i == nx => scale * wts[k],
                _ => scale * wts[k] * h[k],
            });
            let rhs = DVector::from_fn(nx + 2, |i, _| if i < nx { r[i] } else { 0.0 });
            let delta = m.svd(true, true).solve(&rhs, 1e-12 * scale).expect("svd computed");
            for i in 0..nx {
                phi[j * nx + i] += delta[i];
            }
        }
        let e_size = sup(&dec.e);
        if worst < 1e-13 && e_size < 1e-13 {
            return Ok(w);
        }
        w = w.with_parts(model, w.shift.clone(), phi)?;
    }
    Ok(w)
}

fn base_laplacian(model: &ModelFibration, base: &BaseMetric) -> DMatrix<f64> {
    let y = model.y();
    let ny = y.len();
    let d = &model.base.diff;
    let dt = DMatrix::from_fn(ny, ny, |i, k| 0.5 * (1.0 - y[i] * y[i]) * d[(i, k)]);
    let dtt = &dt * &dt;
    DMatrix::from_fn(ny, ny, |i, k| -dtt[(i, k)] / base.g[i])
}

fn base_mean(model: &ModelFibration, base: &BaseMetric, f: &[f64]) -> f64 {
    let (y, w) = (model.y(), &model.base.weights);
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..y.len() {
        let a = w[j] * base.g[j] / (1.0 - y[j] * y[j]);
        num += a * f[j];
        den += a;
    }
    num / den
}

/// Residual norm and update direction for the chosen target.
fn evaluate(
    model: &ModelFibration,
    omega: &RelativeMetric,
    base: &BaseMetric,
    target: SolveTarget,
    tol: f64,
) -> Result<(f64, Vec<f64>), OscError> {
    let eb = build_potential_bundle(model, omega)?;
    match target {
        SolveTarget::Osc => {
            let r = osc_residual(model, omega, base, &eb)?;
            Ok((r.sup, r.coefficients))
        }
        SolveTarget::Esc => {
            let r = esc_residual(model, omega, base, &eb, tol)?;
            let m = base_mean(model, base, &r.osc.coefficients);
            Ok((r.norm, r.osc.coefficients.iter().map(|c| c - m).collect()))
        }
    }
}

pub fn osc_solve(
    model: &ModelFibration,
    omega0: &RelativeMetric,
    base: &BaseMetric,
    opts: &SolveOptions,
) -> Result<(RelativeMetric, SolveTrace), OscError> {
    let mut omega = normalize_fibres(model, omega0)?;
    let mut trace = SolveTrace::default();
    let (mut norm, mut dir) = evaluate(model, &omega, base, opts.target, opts.tol)?;
    trace.residuals.push(norm);
    let lap = base_laplacian(model, base);
    let precond = (DMatrix::identity(model.ny(), model.ny()) + lap).lu();
    let mut step = opts.step;
    while norm > opts.tol {
        if trace.iterations >= opts.max_iter {
            return Err(OscError::Stagnation { iterations: trace.iterations, residual: norm });
        }
        let pd = precond.solve(&DVector::from_column_slice(&dir)).expect("1 + Δ_B is invertible");
        let mut accepted = false;
        while step > 1e-10 {
            let shift: Vec<f64> = (0..model.ny()).map(|j| omega.shift[j] - step * pd[j] / omega.scale).collect();
            if let Ok(trial) = omega.with_parts(model, shift, omega.potential.clone()) {
                let (n2, d2) = evaluate(model, &trial, base, opts.target, opts.tol)?;
                if n2 < norm {
                    omega = trial;
                    norm = n2;
                    dir = d2;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        trace.iterations += 1;
        trace.steps.push(step);
        trace.residuals.push(norm);
        if !accepted {
            return Err(OscError::Stagnation { iterations: trace.iterations, residual: norm });
        }
        step = (2.0 * step).min(opts.step);
    }
    trace.converged = true;
    Ok((omega, trace))
}

