//! Hermite–Einstein metrics on split bundles `⊕ O(d_i)` over the model base
//! and the fibrewise Fubini–Study relative metrics they induce.
//!
//! A diagonal metric is `h_i = h_std^{d_i} e^{u_i}` with `h_std` the
//! standard metric on `O(1)`, whose curvature is `½ ω_round`.  Then
//! `Λ F_i = (d_i/2) G_round / G_B + Δ_B u_i` with `Δ_B ≥ 0`, and the
//! Hermite–Einstein constant is `λ = 2π Σ d_i / (rank · ∫ω_B)`.
//!
//! On `P(O(d₀) ⊕ O(d₁))` the induced relative metric is the reference one
//! with shift `a = u₀ − u₁`.

use nalgebra::{DMatrix, DVector};
use osclab_models::field::sup;
use osclab_models::{BaseMetric, ModelError, ModelFibration, ModelKind, RelativeMetric};
use osclab_osc::{osc_residual, OscError};
use osclab_relative::{build_potential_bundle, RelativeError};
use thiserror::Error;

use std::f64::consts::PI;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HeError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Relative(#[from] RelativeError),
    #[error(transparent)]
    Osc(#[from] OscError),
    #[error("explicit step {dt:e} exceeds the stability limit {limit:e}")]
    Cfl { dt: f64, limit: f64 },
    #[error("bundle degrees {degrees:?} do not match the model (fibre degree {d})")]
    DegreeMismatch { degrees: Vec<i32>, d: i32 },
    #[error("residual increased at step {0}")]
    NotMonotone(usize),
    #[error("flow did not reach tolerance in {steps} steps (residual {residual:e})")]
    NotConverged { steps: usize, residual: f64 },
}

/// Diagonal hermitian metric on `⊕ O(d_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMetric {
    pub degrees: Vec<i32>,
    /// `u_i` on the base nodes.
    pub weights: Vec<Vec<f64>>,
    pub base: BaseMetric,
}

impl HermitianMetric {
    /// Standard weights, `u_i = 0`.
    pub fn standard(model: &ModelFibration, degrees: &[i32], base: &BaseMetric) -> Self {
        HermitianMetric { degrees: degrees.to_vec(), weights: vec![vec![0.0; model.ny()]; degrees.len()], base: base.clone() }
    }

    pub fn rank(&self) -> usize {
        self.degrees.len()
    }

    /// `Λ_{ω_B} F_i` per summand.
    pub fn mean_curvature(&self, model: &ModelFibration) -> Vec<Vec<f64>> {
        let y = model.y();
        self.degrees
            .iter()
            .zip(&self.weights)
            .map(|(&d, u)| {
                let u2 = model.base_dt(&model.base_dt(u));
                (0..y.len()).map(|j| (0.25 * d as f64 * (1.0 - y[j] * y[j]) - u2[j]) / self.base.g[j]).collect()
            })
            .collect()
    }

    /// `(1/2π) ∫_B i F_i` per summand.
    pub fn degrees_by_quadrature(&self, model: &ModelFibration) -> Vec<f64> {
        self.mean_curvature(model).iter().map(|f| base_integral(model, &self.base, f) / (2.0 * PI)).collect()
    }

    /// Per-summand slopes `μ_i = 2π d_i / ∫ω_B`.
    pub fn slopes(&self, model: &ModelFibration) -> Vec<f64> {
        let area = self.base.area(model);
        self.degrees.iter().map(|&d| 2.0 * PI * d as f64 / area).collect()
    }

    pub fn lambda(&self, model: &ModelFibration) -> f64 {
        2.0 * PI * self.degrees.iter().sum::<i32>() as f64 / (self.rank() as f64 * self.base.area(model))
    }
}

/// `∫_B f ω_B`.
pub fn base_integral(model: &ModelFibration, base: &BaseMetric, f: &[f64]) -> f64 {
    let (y, w) = (model.y(), &model.base.weights);
    2.0 * PI * (0..y.len()).map(|j| w[j] * base.g[j] * 2.0 / (1.0 - y[j] * y[j]) * f[j]).sum::<f64>()
}

fn base_l2(model: &ModelFibration, base: &BaseMetric, f: &[f64]) -> f64 {
    base_integral(model, base, &f.iter().map(|v| v * v).collect::<Vec<_>>()).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeReport {
    /// `ΛF_i − λ` per summand.
    pub residual: Vec<Vec<f64>>,
    pub slopes: Vec<f64>,
    pub lambda: f64,
    /// `(1/2π) ∫ tr ΛF ω_B`.
    pub trace_degree: f64,
    pub sup: f64,
}

pub fn he_residual(model: &ModelFibration, h: &HermitianMetric) -> HeReport {
    let lf = h.mean_curvature(model);
    let lambda = h.lambda(model);
    let residual: Vec<Vec<f64>> = lf.iter().map(|f| f.iter().map(|v| v - lambda).collect()).collect();
    let trace: Vec<f64> = (0..model.ny()).map(|j| lf.iter().map(|f| f[j]).sum()).collect();
    let sup = residual.iter().map(|r| sup(r)).fold(0.0, f64::max);
    HeReport {
        residual,
        slopes: h.slopes(model),
        lambda,
        trace_degree: base_integral(model, &h.base, &trace) / (2.0 * PI),
        sup,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    ImplicitEuler,
    ExplicitEuler,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowOptions {
    pub dt: f64,
    pub tol: f64,
    pub max_steps: usize,
    pub scheme: Scheme,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions { dt: 0.5, tol: 1e-10, max_steps: 2000, scheme: Scheme::ImplicitEuler }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FlowTrace {
    pub steps: usize,
    /// Largest per-summand `L²` norm of `ΛF_i − μ_i` after each step.
    pub residuals: Vec<f64>,
}

/// Positive base Laplacian as a matrix on base nodes.
pub fn base_laplacian(model: &ModelFibration, base: &BaseMetric) -> DMatrix<f64> {
    let y = model.y();
    let ny = y.len();
    let d = &model.base.diff;
    let dt = DMatrix::from_fn(ny, ny, |i, k| 0.5 * (1.0 - y[i] * y[i]) * d[(i, k)]);
    let dtt = &dt * &dt;
    DMatrix::from_fn(ny, ny, |i, k| -dtt[(i, k)] / base.g[i])
}

/// Slope-normalized flow `∂_τ u_i = −(ΛF_i − μ_i)`.
pub fn he_flow(
    model: &ModelFibration,
    h0: &HermitianMetric,
    opts: &FlowOptions,
) -> Result<(HermitianMetric, FlowTrace), HeError> {
    let ny = model.ny();
    let lap = base_laplacian(model, &h0.base);
    let slopes = h0.slopes(model);
    let norm = |h: &HermitianMetric| {
        h.mean_curvature(model)
            .iter()
            .zip(&slopes)
            .map(|(f, m)| base_l2(model, &h.base, &f.iter().map(|v| v - m).collect::<Vec<_>>()))
            .fold(0.0, f64::max)
    };
    let sup_res = |h: &HermitianMetric| {
        h.mean_curvature(model)
            .iter()
            .zip(&slopes)
            .map(|(f, m)| f.iter().fold(0.0f64, |a, v| a.max((v - m).abs())))
            .fold(0.0, f64::max)
    };
    if opts.scheme == Scheme::ExplicitEuler {
        let ev = lap.clone().eigenvalues().map(|e| e.max()).unwrap_or_else(|| lap.amax());
        let limit = 2.0 / ev;
        if opts.dt > limit {
            return Err(HeError::Cfl { dt: opts.dt, limit });
        }
    }
    let implicit = (DMatrix::identity(ny, ny) + &lap * opts.dt).lu();
    let mut h = h0.clone();
    let mut trace = FlowTrace::default();
    let mut last = norm(&h);
    while sup_res(&h) > opts.tol {
        if trace.steps >= opts.max_steps {
            return Err(HeError::NotConverged { steps: trace.steps, residual: sup_res(&h) });
        }
        let lf = h.mean_curvature(model);
        for (i, u) in h.weights.iter_mut().enumerate() {
            let r = DVector::from_fn(ny, |j, _| lf[i][j] - slopes[i]);
            let next = match opts.scheme {
                Scheme::ExplicitEuler => DVector::from_column_slice(u) - r * opts.dt,
                Scheme::ImplicitEuler => {
                    // ΛF − μ = c + Δu − μ; move Δu to the left
                    let lu = &lap * DVector::from_column_slice(u);
                    let rhs = DVector::from_column_slice(u) - (r - lu) * opts.dt;
                    implicit.solve(&rhs).expect("1 + τΔ is invertible")
                }
            };
            u.copy_from_slice(next.as_slice());
        }
        trace.steps += 1;
        let n = norm(&h);
        if n > last * (1.0 + 1e-12) + 1e-14 {
            return Err(HeError::NotMonotone(trace.steps));
        }
        trace.residuals.push(n);
        last = n;
    }
    Ok((h, trace))
}

/// Fibrewise Fubini–Study relative metric of `h` on `P(O(d₀) ⊕ O(d₁))`.
pub fn induced_relative_metric(model: &ModelFibration, h: &HermitianMetric) -> Result<RelativeMetric, HeError> {
    let d = match model.kind {
        ModelKind::Product => 0,
        ModelKind::ProjBundle => model.d,
    };
    if h.rank() != 2 || h.degrees[1] - h.degrees[0] != d {
        return Err(HeError::DegreeMismatch { degrees: h.degrees.clone(), d });
    }
    let shift: Vec<f64> = h.weights[0].iter().zip(&h.weights[1]).map(|(a, b)| a - b).collect();
    Ok(RelativeMetric::from_parts(model, shift, vec![0.0; model.len()], vec![0.0; model.ny()])?)
}

/// Fibrewise comoment image `μ*(A) = −(A₁ − A₀) x_a` of a diagonal
/// endomorphism on `P(O(d₀) ⊕ O(d₁))`.
pub fn comoment(model: &ModelFibration, omega: &RelativeMetric, a: &[Vec<f64>]) -> Vec<f64> {
    let nx = model.nx();
    let x = model.x();
    (0..model.len())
        .map(|n| {
            let j = n / nx;
            -(a[1][j] - a[0][j]) * osclab_models::metric::shifted_x(x[n % nx], omega.shift[j])
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    /// `sup |osc(ω_h) − 2 μ*(ΛF_h − λ)|`.
    pub gap: f64,
    pub osc_sup: f64,
    pub he_sup: f64,
}

pub fn equivalence_gap(model: &ModelFibration, h: &HermitianMetric) -> Result<EquivalenceReport, HeError> {
    let omega = induced_relative_metric(model, h)?;
    let eb = build_potential_bundle(model, &omega)?;
    let osc = osc_residual(model, &omega, &h.base, &eb)?;
    let he = he_residual(model, h);
    let target: Vec<f64> = comoment(model, &omega, &he.residual).iter().map(|v| 2.0 * v).collect();
    let gap = osc.field.iter().zip(&target).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    Ok(EquivalenceReport { gap, osc_sup: osc.sup, he_sup: he.sup })
}
