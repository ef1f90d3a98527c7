//! The order-`k⁻¹` correction: `l₁ ∈ C∞_R` with `D_V*D_V l₁ = (S₁)_R`, so
//! that `S(ω_k + k⁻¹ i∂∂̄l₁)` has no `R` component at order `k⁻¹`.

use osclab_models::field::sup;
use osclab_models::{BaseMetric, ModelFibration, RelativeMetric};
use osclab_relative::fibre::{apply, fibre_operators};
use osclab_relative::{build_potential_bundle, decompose, PotentialBundle};

use crate::error::ExpansionError;
use crate::linearize::{base_lichnerowicz, base_mean};
use crate::terms::scalar_order_one;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderOneMode {
    /// `S₁` must have no `E` part and a constant base part.
    Csck,
    /// `E` part a global potential, base part a base holomorphy potential.
    Extremal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderOne {
    pub l1: Vec<f64>,
    pub s1: Vec<f64>,
    /// Base average of `S₁`.
    pub c: f64,
    /// Base part of `S₁` minus `c`.
    pub b1: Vec<f64>,
    /// `E` part of `S₁`.
    pub h1: Vec<f64>,
    /// `(S₁)_R`.
    pub source: Vec<f64>,
    /// `‖D_V*D_V l₁ − (S₁)_R‖ / ‖(S₁)_R‖` after re-projection.
    pub residual: f64,
}

/// Fibrewise `L²` orthonormal basis of `span{1, h}` at base node `j`.
fn excluded(w: &[f64], h: &[f64]) -> Vec<Vec<f64>> {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).zip(w).map(|((x, y), w)| x * y * w).sum::<f64>();
    let one = vec![1.0; w.len()];
    let n1 = dot(&one, &one).sqrt();
    let e1: Vec<f64> = one.iter().map(|v| v / n1).collect();
    let c = dot(h, &e1);
    let h2: Vec<f64> = h.iter().zip(&e1).map(|(a, b)| a - c * b).collect();
    let n2 = dot(&h2, &h2).sqrt();
    if n2 < 1e-14 {
        return vec![e1];
    }
    vec![e1, h2.iter().map(|v| v / n2).collect()]
}

fn project(w: &[f64], ex: &[Vec<f64>], v: &mut [f64]) {
    for e in ex {
        let c: f64 = v.iter().zip(e).zip(w).map(|((a, b), w)| a * b * w).sum();
        for (a, b) in v.iter_mut().zip(e) {
            *a -= c * b;
        }
    }
}

/// Solves `D_V*D_V l = ψ` on every fibre for `l ∈ C∞_R` by conjugate
/// gradients in the fibre `L²` product.  Returns `l` and the worst relative
/// residual after re-projection onto `R`.
pub fn solve_vertical(
    model: &ModelFibration,
    omega: &RelativeMetric,
    eb: &PotentialBundle,
    psi: &[f64],
) -> Result<(Vec<f64>, f64), ExpansionError> {
    let nx = model.nx();
    let mut out = vec![0.0; model.len()];
    let mut worst = 0.0f64;
    for j in 0..model.ny() {
        let ops = fibre_operators(model, omega, j, 0);
        let w = ops.l2_weights(model);
        let ex = excluded(&w, &eb.basis[0][j * nx..(j + 1) * nx]);
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).zip(&w).map(|((x, y), w)| x * y * w).sum::<f64>();
        let op = |v: &[f64]| {
            let mut u = v.to_vec();
            project(&w, &ex, &mut u);
            let mut a = apply(&ops.lichnerowicz, &u);
            project(&w, &ex, &mut a);
            a
        };
        let mut b = psi[j * nx..(j + 1) * nx].to_vec();
        project(&w, &ex, &mut b);
        let bn = dot(&b, &b).sqrt();
        if bn == 0.0 {
            continue;
        }
        let mut x = vec![0.0; nx];
        let mut r = b.clone();
        let mut p = r.clone();
        let mut rr = dot(&r, &r);
        for _ in 0..20 * nx {
            if rr.sqrt() <= 1e-14 * bn {
                break;
            }
            let ap = op(&p);
            let alpha = rr / dot(&p, &ap);
            for i in 0..nx {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            let rr2 = dot(&r, &r);
            let beta = rr2 / rr;
            rr = rr2;
            for i in 0..nx {
                p[i] = r[i] + beta * p[i];
            }
        }
        project(&w, &ex, &mut x);
        let ax = op(&x);
        let res: Vec<f64> = ax.iter().zip(&b).map(|(a, b)| a - b).collect();
        let rel = dot(&res, &res).sqrt() / bn;
        if rel > 1e-9 {
            return Err(ExpansionError::Stagnation { node: j, residual: rel });
        }
        worst = worst.max(rel);
        out[j * nx..(j + 1) * nx].copy_from_slice(&x);
    }
    Ok((out, worst))
}

/// `R(f) = D_t(∂_x f / g)` for invariant `f`.
pub fn r_invariant(model: &ModelFibration, omega: &RelativeMetric, f: &[f64]) -> Vec<f64> {
    let fx = model.dx(f);
    let v: Vec<f64> = fx.iter().zip(&omega.gfac).map(|(a, g)| a / g).collect();
    model.d_t(&v)
}

pub fn solve_order_one(
    model: &ModelFibration,
    omega: &RelativeMetric,
    base: &BaseMetric,
    mode: OrderOneMode,
) -> Result<OrderOne, ExpansionError> {
    let s1 = scalar_order_one(model, omega, base)?;
    let eb = build_potential_bundle(model, omega)?;
    let dec = decompose(model, omega, &eb, &s1)?;
    let c = base_mean(model, base, &dec.base);
    let b1: Vec<f64> = dec.base.iter().map(|v| v - c).collect();
    let tol = 1e-6 * sup(&s1).max(1.0);
    let (e_bad, b_bad) = match mode {
        OrderOneMode::Csck => (sup(&dec.e), sup(&b1)),
        OrderOneMode::Extremal => {
            (sup(&r_invariant(model, omega, &dec.e)), sup(&base_lichnerowicz(model, base, &b1)))
        }
    };
    if e_bad > tol || b_bad > tol {
        return Err(ExpansionError::Hypotheses { e: e_bad, b: b_bad });
    }
    let (l1, residual) = solve_vertical(model, omega, &eb, &dec.r)?;
    Ok(OrderOne { l1, s1, c, b1, h1: dec.e, source: dec.r, residual })
}
