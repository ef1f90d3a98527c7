//! Correction state `ω_{k,r} = k ω_B + ω_X + i∂∂̄Φ_k` with
//!
//! ```text
//! Φ_k = Σ_j ( f_j k^{2−j} + d_j k^{1−j} + l_j k^{−j} )
//! ```
//!
//! and the extremal target `η_{k,r} = c(k) + A_t(k) P_t + A_s(k) P_s`, where
//! `P_t`, `P_s` are the moment maps of the two circles for `ω_{k,r}`
//! (so they move with `Φ_k`) and `c`, `A_t`, `A_s` are polynomials in `k⁻¹`.

use osclab_expansion::exact::total_form;
use osclab_models::kahler::scalar_curvature;
use osclab_models::{BaseMetric, ModelFibration, RelativeMetric, TwoFormField};
use osclab_relative::{build_potential_bundle, PotentialBundle};
use serde::{Deserialize, Serialize};

use crate::error::CorrectionError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Csck,
    Extremal,
}

/// Geometry the corrections are built on.
#[derive(Debug, Clone)]
pub struct Background {
    pub model: ModelFibration,
    pub omega: RelativeMetric,
    pub base: BaseMetric,
    pub eb: PotentialBundle,
}

impl Background {
    pub fn new(model: &ModelFibration, omega: &RelativeMetric, base: &BaseMetric) -> Result<Self, CorrectionError> {
        let eb = build_potential_bundle(model, omega)?;
        Ok(Background { model: model.clone(), omega: omega.clone(), base: base.clone(), eb })
    }

    /// Moment map of the base circle for `ω_B`, on base nodes.
    pub fn base_moment(&self) -> Vec<f64> {
        let pt = self.model.base_dt(&self.base.potential);
        self.model.y().iter().zip(pt).map(|(y, p)| 1.0 + y + p).collect()
    }

    /// `(P_t, P_s)` for `k ω_B + ω_X + i∂∂̄φ`.
    pub fn moments(&self, k: f64, phi: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let m = &self.model;
        let mb = m.pullback(&self.base_moment());
        let vt = self.omega.base_moment_part(m);
        let vs = self.omega.fibre_moment(m);
        let (dt, ds) = (m.d_t(phi), m.d_s(phi));
        let pt = (0..m.len()).map(|n| k * mb[n] + vt[n] + dt[n]).collect();
        let ps = (0..m.len()).map(|n| vs[n] + ds[n]).collect();
        (pt, ps)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionState {
    pub mode: Mode,
    pub order: usize,
    /// `f_j` on base nodes, entering at `k^{2−j}`.
    pub base_fields: Vec<Vec<f64>>,
    /// `d_j ∈ C∞_E`, entering at `k^{1−j}`.
    pub e_fields: Vec<Vec<f64>>,
    /// `l_j ∈ C∞_R`, entering at `k^{−j}`.
    pub r_fields: Vec<Vec<f64>>,
    /// `c(k) = Σ c_j k^{−j}`.
    pub constants: Vec<f64>,
    /// `A_t(k) = Σ a_j k^{−j}`.
    pub base_coeffs: Vec<f64>,
    /// `A_s(k) = Σ a_j k^{−j}`.
    pub fibre_coeffs: Vec<f64>,
    /// Base mean of the order-`j` error left after round `j`.
    pub drift: Vec<f64>,
}

fn poly(c: &[f64], k: f64) -> f64 {
    c.iter().enumerate().map(|(j, v)| v * k.powi(-(j as i32))).sum()
}

fn bump(c: &mut Vec<f64>, j: usize, v: f64) {
    if c.len() <= j {
        c.resize(j + 1, 0.0);
    }
    c[j] += v;
}

impl CorrectionState {
    /// Order zero: no potentials, `η = S(ω_b)`, the constant fibre scalar.
    pub fn new(bg: &Background, mode: Mode) -> Self {
        let s0 = 1.0 / bg.omega.scale;
        CorrectionState {
            mode,
            order: 0,
            base_fields: vec![],
            e_fields: vec![],
            r_fields: vec![],
            constants: vec![s0],
            base_coeffs: vec![0.0],
            fibre_coeffs: vec![0.0],
            drift: vec![],
        }
    }

    /// `Φ_k` on the grid.
    pub fn potential(&self, bg: &Background, k: f64) -> Vec<f64> {
        let m = &bg.model;
        let mut out = vec![0.0; m.len()];
        for (i, f) in self.base_fields.iter().enumerate() {
            let c = k.powi(1 - i as i32);
            for (o, v) in out.iter_mut().zip(m.pullback(f)) {
                *o += c * v;
            }
        }
        for (i, d) in self.e_fields.iter().enumerate() {
            let c = k.powi(-(i as i32));
            for (o, v) in out.iter_mut().zip(d) {
                *o += c * v;
            }
        }
        for (i, l) in self.r_fields.iter().enumerate() {
            let c = k.powi(-(i as i32) - 1);
            for (o, v) in out.iter_mut().zip(l) {
                *o += c * v;
            }
        }
        out
    }

    pub fn form(&self, bg: &Background, k: f64, psi: Option<&[f64]>) -> Result<TwoFormField, CorrectionError> {
        let mut phi = self.potential(bg, k);
        if let Some(p) = psi {
            for (a, b) in phi.iter_mut().zip(p) {
                *a += b;
            }
        }
        Ok(total_form(&bg.model, &bg.omega, &bg.base, k, Some(&phi))?)
    }

    /// `(c, A_t, A_s)` at `k`.
    pub fn eta_coeffs(&self, k: f64) -> [f64; 3] {
        [poly(&self.constants, k), poly(&self.base_coeffs, k), poly(&self.fibre_coeffs, k)]
    }

    /// `η` for `ω_{k,r} + i∂∂̄ψ`, with `ξ` added to the coefficients.
    pub fn eta(&self, bg: &Background, k: f64, psi: Option<&[f64]>, xi: [f64; 3]) -> Vec<f64> {
        let mut phi = self.potential(bg, k);
        if let Some(p) = psi {
            for (a, b) in phi.iter_mut().zip(p) {
                *a += b;
            }
        }
        let (pt, ps) = bg.moments(k, &phi);
        let [c, at, as_] = self.eta_coeffs(k);
        (0..phi.len()).map(|n| c + xi[0] + (at + xi[1]) * pt[n] + (as_ + xi[2]) * ps[n]).collect()
    }

    /// `S(ω_{k,r}) − η_{k,r}`.
    pub fn residual(&self, bg: &Background, k: f64) -> Result<Vec<f64>, CorrectionError> {
        let s = scalar_curvature(&bg.model, &self.form(bg, k, None)?);
        let eta = self.eta(bg, k, None, [0.0; 3]);
        Ok(s.iter().zip(&eta).map(|(a, b)| a - b).collect())
    }

    pub(crate) fn add_constant(&mut self, j: usize, v: f64) {
        bump(&mut self.constants, j, v);
    }

    pub(crate) fn add_base_coeff(&mut self, j: usize, v: f64) {
        bump(&mut self.base_coeffs, j, v);
    }

    pub(crate) fn add_fibre_coeff(&mut self, j: usize, v: f64) {
        bump(&mut self.fibre_coeffs, j, v);
    }

    /// Pads the field lists to `order` entries.
    pub(crate) fn pad(&mut self, bg: &Background, order: usize) {
        let (n, ny) = (bg.model.len(), bg.model.ny());
        self.base_fields.resize(order, vec![0.0; ny]);
        self.e_fields.resize(order, vec![0.0; n]);
        self.r_fields.resize(order, vec![0.0; n]);
    }
}
