//! Exact curvature of `ω_k = k ω_B + ω_X + i∂∂̄ψ` on the grid.

use osclab_models::kahler::{curvature, scalar_curvature};
use osclab_models::metric::positivity_margin;
use osclab_models::{total_metric, BaseMetric, ModelError, ModelFibration, RelativeMetric, TotalMetric, TwoFormField};

use crate::error::ExpansionError;

/// Scalar curvature of a total metric; no expansion involved.
pub fn exact_scalar(model: &ModelFibration, total: &TotalMetric) -> Vec<f64> {
    scalar_curvature(model, &total.form)
}

/// Log-frame matrix of `k ω_B + ω_X + i∂∂̄ψ`, checked for positivity.
pub fn total_form(
    model: &ModelFibration,
    omega: &RelativeMetric,
    base: &BaseMetric,
    k: f64,
    psi: Option<&[f64]>,
) -> Result<TwoFormField, ExpansionError> {
    let mut g = omega.form.clone();
    g.add_pullback(model, &base.g.iter().map(|v| k * v).collect::<Vec<_>>());
    if let Some(p) = psi {
        g.add_scaled(1.0, &model.hessian(p));
    }
    if positivity_margin(model, &g).0 > 0.0 {
        return Ok(g);
    }
    // Let the model crate find the smallest admissible k.
    let corr = psi.map(|p| vec![(p.to_vec(), 0.0)]).unwrap_or_default();
    match total_metric(model, omega, base, k, corr) {
        Err(e) => Err(e.into()),
        Ok(_) => Err(ModelError::NotPositive { k, k_min: k }.into()),
    }
}

/// `S(k ω_B + ω_X + i∂∂̄ψ)`.
pub fn scalar_at(
    model: &ModelFibration,
    omega: &RelativeMetric,
    base: &BaseMetric,
    k: f64,
    psi: Option<&[f64]>,
) -> Result<Vec<f64>, ExpansionError> {
    Ok(scalar_curvature(model, &total_form(model, omega, base, k, psi)?))
}

/// `Ric(k ω_B + ω_X + i∂∂̄ψ)`.
pub fn ricci_at(
    model: &ModelFibration,
    omega: &RelativeMetric,
    base: &BaseMetric,
    k: f64,
    psi: Option<&[f64]>,
) -> Result<TwoFormField, ExpansionError> {
    Ok(curvature(model, &total_form(model, omega, base, k, psi)?).ricci)
}

/// Quadrature weights of `ω_X ∧ ω_B` on the grid.
pub fn volume_weights(model: &ModelFibration, omega: &RelativeMetric, base: &BaseMetric) -> Vec<f64> {
    let tw = model.tensor_weights();
    let (y, nx) = (model.y(), model.nx());
    let c = 4.0 * std::f64::consts::PI * std::f64::consts::PI;
    (0..model.len())
        .map(|n| {
            let j = n / nx;
            c * tw[n] * omega.gfac[n] * 2.0 * base.g[j] / (1.0 - y[j] * y[j])
        })
        .collect()
}

/// Weighted mean over `X`.
pub fn mean(w: &[f64], f: &[f64]) -> f64 {
    w.iter().zip(f).map(|(a, b)| a * b).sum::<f64>() / w.iter().sum::<f64>()
}
