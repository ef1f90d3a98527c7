//! Equivariance of the OSC residual under relative automorphisms.
//!
//! The torus acts trivially on invariant data.  The remaining catalogued
//! automorphism is the fibrewise `C*` boost `w ↦ e^{c/2} w`, i.e.
//! `s ↦ s + c`, which pulls `κ ω_ref(a) + i∂∂̄φ` back to
//! `κ ω_ref(a − c) + i∂∂̄(φ ∘ g)`.

use osclab_models::field::sup;
use osclab_models::metric::shifted_x;
use osclab_models::{BaseMetric, ModelFibration, RelativeMetric};
use osclab_relative::build_potential_bundle;

use crate::error::OscError;
use crate::residual::osc_residual;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Automorphism {
    Identity,
    /// Rotation of each fibre about its poles by the given angle.
    FibreRotation(f64),
    /// Fibrewise `C*` boost `s ↦ s + c`.
    Boost(f64),
    /// Boost of the base, `t ↦ t + c`; not a relative automorphism.
    BaseBoost(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvarianceReport {
    pub gap: f64,
    pub residual_norm: f64,
}

/// Pulls a grid function back by the automorphism.
pub fn pull_function(model: &ModelFibration, g: Automorphism, f: &[f64]) -> Result<Vec<f64>, OscError> {
    match g {
        Automorphism::Identity | Automorphism::FibreRotation(_) => Ok(f.to_vec()),
        Automorphism::Boost(c) => {
            let t: Vec<f64> = model.x().iter().map(|&x| shifted_x(x, -c)).collect();
            Ok(model.resample_fibres(f, &vec![t; model.ny()]))
        }
        Automorphism::BaseBoost(_) => Err(OscError::NotRelative),
    }
}

pub fn pull_metric(model: &ModelFibration, g: Automorphism, omega: &RelativeMetric) -> Result<RelativeMetric, OscError> {
    let phi = pull_function(model, g, &omega.potential)?;
    let shift = match g {
        Automorphism::Boost(c) => omega.shift.iter().map(|a| a - c).collect(),
        _ => omega.shift.clone(),
    };
    Ok(omega.with_parts(model, shift, phi)?)
}

pub fn aut_invariance_check(
    model: &ModelFibration,
    omega: &RelativeMetric,
    base: &BaseMetric,
    g: Automorphism,
) -> Result<InvarianceReport, OscError> {
    let pulled = pull_metric(model, g, omega)?;
    let r1 = osc_residual(model, &pulled, base, &build_potential_bundle(model, &pulled)?)?;
    let r0 = osc_residual(model, omega, base, &build_potential_bundle(model, omega)?)?;
    let r0g = pull_function(model, g, &r0.field)?;
    let gap = sup(&r1.field.iter().zip(&r0g).map(|(a, b)| a - b).collect::<Vec<_>>());
    Ok(InvarianceReport { gap, residual_norm: r0.sup })
}
