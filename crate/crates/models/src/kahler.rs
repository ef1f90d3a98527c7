//! Curvature of invariant Kähler metrics on the grid.
//!
//! Conventions: `Ric ω = −i∂∂̄ log det g`, `S = Λ_ω Ric ω`, and the Laplacian
//! is the positive one, `Δf = −Λ_ω i∂∂̄f`.  Gradients pair as
//! `⟨∇f, ∇g⟩ = 2 g^{ab̄} ∂_a f ∂_b̄ g`, so that `½⟨∇μ, ∇φ⟩ = D φ` for a
//! moment map `μ` of the matching circle.
//!
//! `log det G` is split as `log Q + log(1−x²) + log(1−y²)` with `Q` smooth and
//! positive; the Hessians of the two singular logs are taken in closed form.

use crate::field::TwoFormField;
use crate::model::ModelFibration;

/// Hessian of `log(1 − x²)`.
pub fn sing_hessian_x(model: &ModelFibration) -> TwoFormField {
    let d = model.df();
    let (x, y, nx) = (model.x(), model.y(), model.nx());
    let mut h = TwoFormField::zeros(model.len());
    for n in 0..model.len() {
        let (xi, yj) = (x[n % nx], y[n / nx]);
        h.ss[n] = -0.5 * (1.0 - xi * xi);
        h.ts[n] = 0.25 * d * (1.0 + yj) * (1.0 - xi * xi);
        h.tt[n] = 0.5 * d * (0.5 * xi * (1.0 - yj * yj) - 0.25 * d * (1.0 + yj).powi(2) * (1.0 - xi * xi));
    }
    h
}

/// Hessian of `log(1 − y²)`.
pub fn sing_hessian_y(model: &ModelFibration) -> TwoFormField {
    let (y, nx) = (model.y(), model.nx());
    let mut h = TwoFormField::zeros(model.len());
    for n in 0..model.len() {
        let yj = y[n / nx];
        h.tt[n] = -0.5 * (1.0 - yj * yj);
    }
    h
}

pub fn det(g: &TwoFormField) -> Vec<f64> {
    (0..g.len()).map(|n| g.tt[n] * g.ss[n] - g.ts[n] * g.ts[n]).collect()
}

/// `Λ_ω β = tr(G⁻¹ B)`.
pub fn trace(g: &TwoFormField, b: &TwoFormField) -> Vec<f64> {
    (0..g.len())
        .map(|n| {
            let det = g.tt[n] * g.ss[n] - g.ts[n] * g.ts[n];
            (g.ss[n] * b.tt[n] - 2.0 * g.ts[n] * b.ts[n] + g.tt[n] * b.ss[n]) / det
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct Curvature {
    pub det: Vec<f64>,
    pub ricci: TwoFormField,
    pub scalar: Vec<f64>,
}

pub fn curvature(model: &ModelFibration, g: &TwoFormField) -> Curvature {
    let (x, y, nx) = (model.x(), model.y(), model.nx());
    let det = det(g);
    let lq: Vec<f64> = (0..g.len())
        .map(|n| {
            let (xi, yj) = (x[n % nx], y[n / nx]);
            (det[n] / ((1.0 - xi * xi) * (1.0 - yj * yj))).ln()
        })
        .collect();
    let mut ricci = model.hessian(&lq).scale(-1.0);
    ricci.add_scaled(-1.0, &sing_hessian_x(model));
    ricci.add_scaled(-1.0, &sing_hessian_y(model));
    let scalar = trace(g, &ricci);
    Curvature { det, ricci, scalar }
}

pub fn scalar_curvature(model: &ModelFibration, g: &TwoFormField) -> Vec<f64> {
    curvature(model, g).scalar
}

/// Positive Laplacian `−tr(G⁻¹ Hess f)`.
pub fn laplacian(model: &ModelFibration, g: &TwoFormField, f: &[f64]) -> Vec<f64> {
    trace(g, &model.hessian(f)).into_iter().map(|v| -v).collect()
}

/// `⟨∇f, ∇h⟩ = 2 (Df)ᵀ G⁻¹ (Dh)`.
pub fn grad_dot(model: &ModelFibration, g: &TwoFormField, f: &[f64], h: &[f64]) -> Vec<f64> {
    let (ft, fs) = (model.d_t(f), model.d_s(f));
    let (ht, hs) = (model.d_t(h), model.d_s(h));
    (0..g.len())
        .map(|n| {
            let det = g.tt[n] * g.ss[n] - g.ts[n] * g.ts[n];
            2.0 * (g.ss[n] * ft[n] * ht[n] - g.ts[n] * (ft[n] * hs[n] + fs[n] * ht[n]) + g.tt[n] * fs[n] * hs[n]) / det
        })
        .collect()
}

/// Curvature `ρ = −i∂∂̄ log G_ss` of the vertical line bundle metric.
pub fn relative_ricci_form(model: &ModelFibration, g: &TwoFormField) -> TwoFormField {
    let (x, nx) = (model.x(), model.nx());
    let lg: Vec<f64> = (0..g.len()).map(|n| (2.0 * g.ss[n] / (1.0 - x[n % nx] * x[n % nx])).ln()).collect();
    let mut rho = model.hessian(&lg).scale(-1.0);
    rho.add_scaled(-1.0, &sing_hessian_x(model));
    rho
}

/// Components of a form in the frame `(e_t − c e_s, e_s)` adapted to the
/// splitting `TX = H ⊕ V` of the relative form `gx`, `c = G_ts/G_ss`.
#[derive(Debug, Clone)]
pub struct Split {
    pub h: Vec<f64>,
    pub mix: Vec<f64>,
    pub v: Vec<f64>,
}

pub fn split(gx: &TwoFormField, b: &TwoFormField) -> Split {
    let n = gx.len();
    let mut h = vec![0.0; n];
    let mut mix = vec![0.0; n];
    for k in 0..n {
        let c = gx.ts[k] / gx.ss[k];
        h[k] = b.tt[k] - 2.0 * c * b.ts[k] + c * c * b.ss[k];
        mix[k] = b.ts[k] - c * b.ss[k];
    }
    Split { h, mix, v: b.ss.clone() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{reference_base_metric, reference_relative_metric, total_metric};
    use crate::model::{build_model, ModelConfig};

    #[test]
    fn product_of_round_spheres() {
        let m = build_model(&ModelConfig::product(16)).unwrap();
        let r = reference_relative_metric(&m);
        let b = reference_base_metric(&m);
        for k in [1.0, 10.0] {
            let t = total_metric(&m, &r, &b, k, vec![]).unwrap();
            let s = scalar_curvature(&m, &t.form);
            for v in s {
                assert!((v - (1.0 + 1.0 / k)).abs() < 1e-11, "{v}");
            }
        }
    }

    #[test]
    fn fibre_ricci_equals_fibre_metric() {
        let m = build_model(&ModelConfig::proj_bundle(1, 16)).unwrap();
        let r = reference_relative_metric(&m);
        let rho = relative_ricci_form(&m, &r.form);
        for n in 0..m.len() {
            assert!((rho.ss[n] - r.form.ss[n]).abs() < 1e-12);
            assert!((rho.ts[n] - r.form.ts[n]).abs() < 1e-12);
        }
    }
}
