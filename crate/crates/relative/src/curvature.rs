//! Fibre integrals, curvature of the fibration and vertical operators.
//!
//! Forms are invariant (1,1)-forms in the log frame; the splitting
//! `TX = H ⊕ V` is the `ω_X`-orthogonal one, with horizontal lift
//! `e_t − c e_s`, `c = G_ts / G_ss`.

use osclab_models::field::{sup, TwoFormField};
use osclab_models::kahler::{relative_ricci_form, split};
use osclab_models::spectral::antiderivative_matrix;
use osclab_models::{BaseMetric, ModelFibration, RelativeMetric};

use crate::error::RelativeError;
use crate::fibre::{apply, fibre_operators};

/// Integrands accepted by [`fibre_integral`].
#[derive(Debug, Clone, Copy)]
pub enum Integrand<'a> {
    /// `f ω_X^m`; yields a function on the base.
    Density(&'a [f64]),
    /// A (1,1)-form, integrated over the fibres; yields a function.
    Form(&'a TwoFormField),
    /// `η ∧ ω_X^m`; yields the log-frame density of a base (1,1)-form.
    Wedge(&'a TwoFormField),
    /// A bare function: degree too low to integrate.
    Function(&'a [f64]),
}

pub fn fibre_integral(
    model: &ModelFibration,
    omega: &RelativeMetric,
    eta: Integrand<'_>,
) -> Result<Vec<f64>, RelativeError> {
    let g = &omega.form;
    match eta {
        Integrand::Density(f) => Ok(omega.fibre_integral(model, f)),
        Integrand::Form(b) => {
            let f: Vec<f64> = (0..b.len()).map(|n| b.ss[n] / g.ss[n]).collect();
            Ok(omega.fibre_integral(model, &f))
        }
        Integrand::Wedge(b) => {
            let f: Vec<f64> = (0..b.len())
                .map(|n| (b.tt[n] * g.ss[n] + b.ss[n] * g.tt[n] - 2.0 * b.ts[n] * g.ts[n]) / g.ss[n])
                .collect();
            Ok(omega.fibre_integral(model, &f))
        }
        Integrand::Function(_) => Err(RelativeError::DegreeTooLow),
    }
}

/// Horizontal block `(ω_X)_H = G_tt − G_ts²/G_ss`.
pub fn horizontal_part(omega: &RelativeMetric) -> Vec<f64> {
    split(&omega.form, &omega.form).h
}

/// `μ*(F_H) = (ω_X)_H − π*β` and `β = ∫_{X/B} (ω_X)_H ∧ ω_X^m / V`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticCurvature {
    pub mu_f: Vec<f64>,
    pub beta: Vec<f64>,
}

pub fn symplectic_curvature(model: &ModelFibration, omega: &RelativeMetric) -> SymplecticCurvature {
    let h = horizontal_part(omega);
    let beta = omega.fibre_mean(model, &h);
    let pb = model.pullback(&beta);
    SymplecticCurvature { mu_f: h.iter().zip(&pb).map(|(a, b)| a - b).collect(), beta }
}

/// Everything curvature-related for one relative metric.
#[derive(Debug, Clone)]
pub struct CurvatureData {
    pub mu_f: Vec<f64>,
    pub beta: Vec<f64>,
    pub rho: TwoFormField,
    /// HH, MIX and VV blocks of `ρ` in the `ω_X` splitting.
    pub rho_h: Vec<f64>,
    pub rho_mix: Vec<f64>,
    pub rho_v: Vec<f64>,
    /// Gap between the two chart computations of `ρ`.
    pub chart_gap: f64,
}

/// `ρ = −i∂∂̄ log det g_V`, computed in both affine charts and compared.
pub fn relative_ricci(model: &ModelFibration, omega: &RelativeMetric) -> Result<TwoFormField, RelativeError> {
    let (rho, gap) = ricci_with_gap(model, omega);
    if gap > 1e-8 {
        return Err(RelativeError::ChartMismatch(gap));
    }
    Ok(rho)
}

fn ricci_with_gap(model: &ModelFibration, omega: &RelativeMetric) -> (TwoFormField, f64) {
    let rho = relative_ricci_form(model, &omega.form);
    let other = relative_ricci_form(model, &omega.form.other_chart(model)).other_chart(model);
    let gap = rho.sub(&other).sup() / rho.sup().max(1.0);
    (rho, gap)
}

pub fn curvature_data(model: &ModelFibration, omega: &RelativeMetric) -> Result<CurvatureData, RelativeError> {
    let sc = symplectic_curvature(model, omega);
    let (rho, chart_gap) = ricci_with_gap(model, omega);
    if chart_gap > 1e-8 {
        return Err(RelativeError::ChartMismatch(chart_gap));
    }
    let sp = split(&omega.form, &rho);
    Ok(CurvatureData { mu_f: sc.mu_f, beta: sc.beta, rho, rho_h: sp.h, rho_mix: sp.mix, rho_v: sp.v, chart_gap })
}

pub enum Contraction<'a> {
    /// `Λ_V` with respect to `ω_X`.
    Vertical(&'a RelativeMetric),
    /// `Λ_{ω_B}` of the HH block in the `ω_X` splitting.
    Horizontal(&'a RelativeMetric, &'a BaseMetric),
}

pub fn contract(model: &ModelFibration, beta: &TwoFormField, mode: Contraction<'_>) -> Vec<f64> {
    match mode {
        Contraction::Vertical(omega) => (0..beta.len()).map(|n| beta.ss[n] / omega.form.ss[n]).collect(),
        Contraction::Horizontal(omega, base) => {
            let h = split(&omega.form, beta).h;
            let gb = model.pullback(&base.g);
            h.iter().zip(&gb).map(|(a, b)| a / b).collect()
        }
    }
}

/// `Δ_V f = −Λ_V(i∂∂̄ f)`, non-negative.
pub fn vertical_laplacian(model: &ModelFibration, omega: &RelativeMetric, f: &[f64]) -> Vec<f64> {
    let f2 = model.d_s(&model.d_s(f));
    (0..f.len()).map(|n| -f2[n] / omega.form.ss[n]).collect()
}

/// `D_V*D_V` applied fibre by fibre to an invariant function.
pub fn fibrewise_lichnerowicz(model: &ModelFibration, omega: &RelativeMetric, f: &[f64]) -> Vec<f64> {
    let nx = model.nx();
    let mut out = Vec::with_capacity(f.len());
    for j in 0..model.ny() {
        let ops = fibre_operators(model, omega, j, 0);
        out.extend(apply(&ops.lichnerowicz, &f[j * nx..(j + 1) * nx]));
    }
    out
}

/// Hamiltonian of `[∂_t^#, ∂_θz^#]^vert` for the horizontal lifts
/// `∂_t − c ∂_s`, `∂_θz − c ∂_θw`.  The bracket is the vertical field
/// `−κ ∂_θw` with `κ = −(D_t c − c D_s c)`; its mean-zero Hamiltonian solves
/// `D_s H = −κ G_ss` fibre by fibre.
pub fn bracket_hamiltonian(model: &ModelFibration, omega: &RelativeMetric) -> Vec<f64> {
    let g = &omega.form;
    let (x, nx) = (model.x(), model.nx());
    let c: Vec<f64> = (0..g.len()).map(|n| g.ts[n] / g.ss[n]).collect();
    let (ct, cs) = (model.d_t(&c), model.d_s(&c));
    // ∂_x H = −κ G_ss / (½(1−x²)) = −κ g
    let rhs: Vec<f64> = (0..g.len()).map(|n| (ct[n] - c[n] * cs[n]) * omega.gfac[n]).collect();
    let anti = antiderivative_matrix(x, &model.fibre.weights);
    let mut h = Vec::with_capacity(g.len());
    for j in 0..model.ny() {
        h.extend(apply(&anti, &rhs[j * nx..(j + 1) * nx]));
    }
    let m = model.pullback(&omega.fibre_mean(model, &h));
    h.iter().zip(&m).map(|(a, b)| a - b).collect()
}

/// Outcome of comparing two relative forms with equal fibre restrictions.
#[derive(Debug, Clone, PartialEq)]
pub struct AgreeReport {
    /// `ν` with `ω̃ = ω + π*ν`, log-frame density.
    pub nu: Vec<f64>,
    pub vv_gap: f64,
    pub mix_gap: f64,
    /// Fibre variation of the HH difference.
    pub hh_variation: f64,
    pub agree: bool,
}

pub fn forms_agree_on_fibres_check(
    model: &ModelFibration,
    a: &RelativeMetric,
    b: &RelativeMetric,
    tol: f64,
) -> Result<AgreeReport, RelativeError> {
    let vv = sup(&osclab_models::field::sub(&b.form.ss, &a.form.ss));
    if vv > tol {
        return Err(RelativeError::NotApplicable(vv));
    }
    let mix = sup(&osclab_models::field::sub(&b.form.ts, &a.form.ts));
    let diff = osclab_models::field::sub(&b.form.tt, &a.form.tt);
    let nu = a.fibre_mean(model, &diff);
    let var = sup(&osclab_models::field::sub(&diff, &model.pullback(&nu)));
    Ok(AgreeReport { nu, vv_gap: vv, mix_gap: mix, hh_variation: var, agree: mix <= tol && var <= tol })
}
