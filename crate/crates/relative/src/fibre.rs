//! Fibrewise operators on one fibre `X_b`, acting on a single circle mode.
//!
//! A fibre function in mode `b` is `e^{i b θ_w} (1−x²)^{|b|/2} p(x)` and
//! the matrices below act on the reduced values `p` at the fibre nodes.  With
//! `G_ss = ½(1−x²) g` and `β = |b|/2`:
//!
//! ```text
//! Δ p    = −[½(1−x²) p'' − (1+2β) x p' − β(1+2β) p] / g
//! D*D p  = Δ²p − S Δp + (S'/g) [½(1−x²) p' − (βx + b/2) p]
//! ```
//!
//! where `S` is the fibre scalar curvature and the last bracket is `∂_ζ̄`.

use nalgebra::DMatrix;
use osclab_models::{ModelFibration, RelativeMetric};

#[derive(Debug, Clone)]
pub struct FibreOperators {
    pub b: i32,
    /// Conformal factor `g` of the fibre metric.
    pub gfac: Vec<f64>,
    /// Fibre scalar curvature.
    pub scalar: Vec<f64>,
    pub laplacian: DMatrix<f64>,
    pub lichnerowicz: DMatrix<f64>,
}

/// Scalar curvature of `½(1−x²) g dζ dζ̄` on one fibre, from `g` alone.
pub fn fibre_scalar(model: &ModelFibration, g: &[f64]) -> Vec<f64> {
    let x = model.x();
    let lg: Vec<f64> = g.iter().map(|v| v.ln()).collect();
    let l1 = model.fibre_dx(&lg);
    let a: Vec<f64> = (0..x.len()).map(|i| 0.5 * (1.0 - x[i] * x[i]) * l1[i]).collect();
    let a1 = model.fibre_dx(&a);
    (0..x.len()).map(|i| (1.0 - a1[i]) / g[i]).collect()
}

pub fn fibre_operators(model: &ModelFibration, omega: &RelativeMetric, j: usize, b: i32) -> FibreOperators {
    let nx = model.nx();
    let g = omega.gfac[j * nx..(j + 1) * nx].to_vec();
    fibre_operators_for(model, &g, b)
}

/// Operators for an explicit conformal factor on the fibre grid.
pub fn fibre_operators_for(model: &ModelFibration, g: &[f64], b: i32) -> FibreOperators {
    let x = model.x();
    let nx = x.len();
    let d = &model.fibre.diff;
    let d2 = d * d;
    let beta = b.unsigned_abs() as f64 / 2.0;
    let s = fibre_scalar(model, g);
    let s1 = model.fibre_dx(&s);
    let lap = DMatrix::from_fn(nx, nx, |i, k| {
        let id = if i == k { 1.0 } else { 0.0 };
        -(0.5 * (1.0 - x[i] * x[i]) * d2[(i, k)] - (1.0 + 2.0 * beta) * x[i] * d[(i, k)] - beta * (1.0 + 2.0 * beta) * id)
            / g[i]
    });
    let dbar = DMatrix::from_fn(nx, nx, |i, k| {
        let id = if i == k { 1.0 } else { 0.0 };
        0.5 * (1.0 - x[i] * x[i]) * d[(i, k)] - (beta * x[i] + b as f64 / 2.0) * id
    });
    let mut lich = &lap * &lap;
    for i in 0..nx {
        for k in 0..nx {
            lich[(i, k)] += -s[i] * lap[(i, k)] + s1[i] / g[i] * dbar[(i, k)];
        }
    }
    FibreOperators { b, gfac: g.to_vec(), scalar: s, laplacian: lap, lichnerowicz: lich }
}

impl FibreOperators {
    /// Quadrature weights of the fibre `L²` product on reduced values,
    /// `2π w_i (1−x_i²)^{|b|} g_i`.
    pub fn l2_weights(&self, model: &ModelFibration) -> Vec<f64> {
        let x = model.x();
        let w = &model.fibre.weights;
        (0..x.len())
            .map(|i| 2.0 * std::f64::consts::PI * w[i] * (1.0 - x[i] * x[i]).powi(self.b.abs()) * self.gfac[i])
            .collect()
    }

    pub fn dot(&self, model: &ModelFibration, p: &[f64], q: &[f64]) -> f64 {
        self.l2_weights(model).iter().zip(p).zip(q).map(|((w, a), b)| w * a * b).sum()
    }

    /// Largest `|⟨Ae_i, e_k⟩ − ⟨e_i, Ae_k⟩|` relative to `|A|`, in the
    /// fibre `L²` product.
    pub fn asymmetry(&self, model: &ModelFibration, a: &DMatrix<f64>) -> f64 {
        let w = self.l2_weights(model);
        let n = w.len();
        let wa = DMatrix::from_fn(n, n, |i, k| w[i] * a[(i, k)]);
        let scale = wa.amax().max(1e-300);
        (&wa - wa.transpose()).amax() / scale
    }
}

pub fn apply(m: &DMatrix<f64>, p: &[f64]) -> Vec<f64> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|k| m[(i, k)] * p[k]).sum()).collect()
}
