//! Leading coefficients of the `k⁻¹` expansions of contraction, Laplacian,
//! Ricci form and scalar curvature of `ω_k = k ω_B + ω_X`.
//!
//! In the frame adapted to `TX = H ⊕ V` the total form is block diagonal,
//! `ω_k = (k G_B + H) ⊕ G_ss`, so `Λ_k β = β_V/G_ss + β_H/(k G_B + H)` and
//! `log det ω_k = log(k G_B) + log G_ss + log(1 + k⁻¹ Λ_B H)`.

use osclab_models::field::sup;
use osclab_models::kahler::{laplacian, split, trace};
use osclab_models::{BaseMetric, ModelFibration, RelativeMetric, TwoFormField};
use osclab_relative::{horizontal_part, relative_ricci, vertical_laplacian};

use crate::error::ExpansionError;
use crate::exact::{ricci_at, total_form};

#[derive(Debug, Clone, Copy)]
pub enum Quantity<'a> {
    /// `Λ_{ω_k} β` for a closed test form.
    Contraction(&'a TwoFormField),
    /// `Δ_k φ`.
    Laplacian(&'a [f64]),
    Ricci,
    Scalar,
}

impl Quantity<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            Quantity::Contraction(_) => "contraction",
            Quantity::Laplacian(_) => "laplacian",
            Quantity::Ricci => "ricci",
            Quantity::Scalar => "scalar",
        }
    }
}

/// A function or a form on `X`.
#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    Function(Vec<f64>),
    Form(TwoFormField),
}

impl Term {
    pub fn sup(&self) -> f64 {
        match self {
            Term::Function(f) => sup(f),
            Term::Form(b) => b.sup(),
        }
    }

    /// `self − a − k⁻¹ b`, or `self − a` when `b` is `None`.
    pub fn residual(&self, a: &Term, b: Option<(&Term, f64)>) -> Term {
        match (self, a) {
            (Term::Function(s), Term::Function(a)) => {
                let mut r: Vec<f64> = s.iter().zip(a).map(|(x, y)| x - y).collect();
                if let Some((Term::Function(b), k)) = b {
                    for (r, v) in r.iter_mut().zip(b) {
                        *r -= v / k;
                    }
                }
                Term::Function(r)
            }
            (Term::Form(s), Term::Form(a)) => {
                let mut r = s.sub(a);
                if let Some((Term::Form(b), k)) = b {
                    r.add_scaled(-1.0 / k, b);
                }
                Term::Form(r)
            }
            _ => panic!("mixed term kinds"),
        }
    }

    pub fn as_function(&self) -> Option<&[f64]> {
        match self {
            Term::Function(f) => Some(f),
            Term::Form(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionTerms {
    pub order0: Term,
    pub order1: Term,
}

fn over_base(model: &ModelFibration, base: &BaseMetric, f: &[f64]) -> Vec<f64> {
    let gb = model.pullback(&base.g);
    f.iter().zip(gb).map(|(a, b)| a / b).collect()
}

/// `Λ_{ω_B} (ω_X)_H`.
pub fn horizontal_trace(model: &ModelFibration, omega: &RelativeMetric, base: &BaseMetric) -> Vec<f64> {
    over_base(model, base, &horizontal_part(omega))
}

/// `S₁ = S(ω_B) + Λ_{ω_B} ρ_H + Δ_V(Λ_{ω_B}(ω_X)_H)`.
pub fn scalar_order_one(
    model: &ModelFibration,
    omega: &RelativeMetric,
    base: &BaseMetric,
) -> Result<Vec<f64>, ExpansionError> {
    let rho = relative_ricci(model, omega)?;
    let rho_h = over_base(model, base, &split(&omega.form, &rho).h);
    let dv = vertical_laplacian(model, omega, &horizontal_trace(model, omega, base));
    let sb = model.pullback(&base.scalar);
    Ok((0..model.len()).map(|n| sb[n] + rho_h[n] + dv[n]).collect())
}

pub fn expansion_terms(
    model: &ModelFibration,
    omega: &RelativeMetric,
    base: &BaseMetric,
    quantity: Quantity<'_>,
) -> Result<ExpansionTerms, ExpansionError> {
    let g = &omega.form;
    Ok(match quantity {
        Quantity::Contraction(beta) => {
            let v = (0..beta.len()).map(|n| beta.ss[n] / g.ss[n]).collect();
            let h = over_base(model, base, &split(g, beta).h);
            ExpansionTerms { order0: Term::Function(v), order1: Term::Function(h) }
        }
        Quantity::Laplacian(phi) => {
            let v = vertical_laplacian(model, omega, phi);
            let hess = model.hessian(phi);
            let h: Vec<f64> = over_base(model, base, &split(g, &hess).h).into_iter().map(|v| -v).collect();
            ExpansionTerms { order0: Term::Function(v), order1: Term::Function(h) }
        }
        Quantity::Ricci => {
            let mut r0 = relative_ricci(model, omega)?;
            let rb: Vec<f64> = base.scalar.iter().zip(&base.g).map(|(s, g)| s * g).collect();
            r0.add_pullback(model, &rb);
            let r1 = model.hessian(&horizontal_trace(model, omega, base)).scale(-1.0);
            ExpansionTerms { order0: Term::Form(r0), order1: Term::Form(r1) }
        }
        Quantity::Scalar => {
            let rho = relative_ricci(model, omega)?;
            let s0 = (0..g.len()).map(|n| rho.ss[n] / g.ss[n]).collect();
            ExpansionTerms { order0: Term::Function(s0), order1: Term::Function(scalar_order_one(model, omega, base)?) }
        }
    })
}

/// The exact quantity at finite `k`, with an optional potential correction.
pub fn exact_quantity(
    model: &ModelFibration,
    omega: &RelativeMetric,
    base: &BaseMetric,
    quantity: Quantity<'_>,
    k: f64,
    psi: Option<&[f64]>,
) -> Result<Term, ExpansionError> {
    Ok(match quantity {
        Quantity::Contraction(beta) => Term::Function(trace(&total_form(model, omega, base, k, psi)?, beta)),
        Quantity::Laplacian(phi) => Term::Function(laplacian(model, &total_form(model, omega, base, k, psi)?, phi)),
        Quantity::Ricci => Term::Form(ricci_at(model, omega, base, k, psi)?),
        Quantity::Scalar => Term::Function(crate::exact::scalar_at(model, omega, base, k, psi)?),
    })
}
