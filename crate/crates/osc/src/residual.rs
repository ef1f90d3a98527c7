//! The optimal symplectic connection operator and its extremal variant.

use osclab_models::field::sup;
use osclab_models::{BaseMetric, ModelFibration, RelativeMetric};
use osclab_relative::{curvature_data, vertical_laplacian, PotentialBundle};

use crate::error::OscError;
use crate::r_op::r_apply_unchecked;

/// `p(Δ_V(Λ_{ω_B} μ*F_H) + Λ_{ω_B} ρ_H)` and friends.
#[derive(Debug, Clone, PartialEq)]
pub struct OscResidual {
    /// The projected field `p(θ)`.
    pub field: Vec<f64>,
    /// The unprojected OSC field `θ`.
    pub raw: Vec<f64>,
    /// Coefficient `c(b)` of the invariant potential, per base node.
    pub coefficients: Vec<f64>,
    pub sup: f64,
    /// Largest fibrewise `L²` norm over the base.
    pub fibre_l2: f64,
}

fn lambda_b(model: &ModelFibration, base: &BaseMetric, hh: &[f64]) -> Vec<f64> {
    let gb = model.pullback(&base.g);
    hh.iter().zip(&gb).map(|(a, b)| a / b).collect()
}

/// The unprojected OSC field `Δ_V(Λ μ*F_H) + Λ ρ_H`.
pub fn osc_field(model: &ModelFibration, omega: &RelativeMetric, base: &BaseMetric) -> Result<Vec<f64>, OscError> {
    let c = curvature_data(model, omega)?;
    let lf = lambda_b(model, base, &c.mu_f);
    let lr = lambda_b(model, base, &c.rho_h);
    let dl = vertical_laplacian(model, omega, &lf);
    Ok(dl.iter().zip(&lr).map(|(a, b)| a + b).collect())
}

fn project(
    model: &ModelFibration,
    omega: &RelativeMetric,
    eb: &PotentialBundle,
    raw: Vec<f64>,
) -> Result<OscResidual, OscError> {
    let c = eb.coefficients(model, omega, &raw)?;
    let coefficients: Vec<f64> = c.iter().map(|v| v[0]).collect();
    let h = eb.invariant_potential();
    let nx = model.nx();
    let field: Vec<f64> = (0..model.len()).map(|n| coefficients[n / nx] * h[n]).collect();
    let fibre_l2 = (0..model.ny())
        .map(|j| {
            let r = &field[j * nx..(j + 1) * nx];
            omega.fibre_dot(model, j, r, r).sqrt()
        })
        .fold(0.0f64, f64::max);
    Ok(OscResidual { sup: sup(&field), field, raw, coefficients, fibre_l2 })
}

pub fn osc_residual(
    model: &ModelFibration,
    omega: &RelativeMetric,
    base: &BaseMetric,
    eb: &PotentialBundle,
) -> Result<OscResidual, OscError> {
    let raw = osc_field(model, omega, base)?;
    project(model, omega, eb, raw)
}

/// Fano form `p(Δ_V(Λ μ*F_H) + λ Λ μ*F_H)`, with `λ[ω_b] = c₁(X_b)`.
pub fn fano_residual(
    model: &ModelFibration,
    omega: &RelativeMetric,
    base: &BaseMetric,
    eb: &PotentialBundle,
) -> Result<OscResidual, OscError> {
    let lambda = fano_lambda(omega);
    let c = curvature_data(model, omega)?;
    // λω_X − ρ must be a pullback: equal VV and MIX blocks.
    let g = &omega.form;
    let scale = sup(&g.ss);
    let mut gap = 0.0f64;
    for n in 0..g.len() {
        gap = gap.max((lambda * g.ss[n] - c.rho.ss[n]).abs()).max((lambda * g.ts[n] - c.rho.ts[n]).abs());
    }
    if gap > 1e-7 * scale {
        return Err(OscError::NotFano(gap / scale));
    }
    let lf = lambda_b(model, base, &c.mu_f);
    let dl = vertical_laplacian(model, omega, &lf);
    let raw = dl.iter().zip(&lf).map(|(a, b)| a + lambda * b).collect();
    project(model, omega, eb, raw)
}

/// `λ = 4π / V`: the fibre class is `λ⁻¹ c₁` in the normalization where
/// round fibres of area `4π` satisfy `Ric = ω`.
pub fn fano_lambda(omega: &RelativeMetric) -> f64 {
    4.0 * std::f64::consts::PI / omega.volume
}

/// `R` applied to the projected OSC field.
#[derive(Debug, Clone, PartialEq)]
pub struct EscResidual {
    /// `R(p(θ))`, coefficient of `dζ̄_t ⊗ ∂_ζs`.
    pub field: Vec<f64>,
    pub norm: f64,
    /// `h₁ = p(θ)` when the residual is below tolerance.
    pub potential: Option<Vec<f64>>,
    /// `ψ_{R,1} = θ − p(θ)` alongside `h₁`.
    pub remainder: Option<Vec<f64>>,
    /// The vertical field `∇_V^{1,0} h₁` as a multiple of `∂_ζs`.
    pub vector_field: Option<Vec<f64>>,
    pub osc: OscResidual,
}

pub fn esc_residual(
    model: &ModelFibration,
    omega: &RelativeMetric,
    base: &BaseMetric,
    eb: &PotentialBundle,
    tol: f64,
) -> Result<EscResidual, OscError> {
    let osc = osc_residual(model, omega, base, eb)?;
    let (field, v) = r_apply_unchecked(model, omega, &osc.field);
    let norm = sup(&field);
    let ok = norm <= tol;
    Ok(EscResidual {
        field,
        norm,
        potential: ok.then(|| osc.field.clone()),
        remainder: ok.then(|| osc.raw.iter().zip(&osc.field).map(|(a, b)| a - b).collect()),
        vector_field: ok.then_some(v),
        osc,
    })
}
