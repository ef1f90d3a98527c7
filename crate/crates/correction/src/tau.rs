//! Lifts of holomorphy potentials of the torus to `ω_{k,r}`:
//! `τ_k(h_B, h_X) = k π*h_B + h_X + ½⟨∇φ_{k,r}, ∇(k π*h_B + h_X)⟩_{ω_k}`.

use osclab_expansion::exact::total_form;
use osclab_models::field::sup;
use osclab_models::kahler::grad_dot;
use osclab_models::metric::shifted_x;

use crate::error::CorrectionError;
use crate::state::{Background, CorrectionState};

#[derive(Debug, Clone, PartialEq)]
pub struct LiftedPotential {
    pub k: f64,
    /// `k π*h_B + h_X`.
    pub lift: Vec<f64>,
    /// `½⟨∇φ_{k,r}, ∇(k π*h_B + h_X)⟩`.
    pub correction: Vec<f64>,
    pub value: Vec<f64>,
}

fn span_residual(cols: &[&[f64]], v: &[f64]) -> f64 {
    let m = cols.len();
    let g = nalgebra::DMatrix::from_fn(m, m, |a, b| cols[a].iter().zip(cols[b]).map(|(x, y)| x * y).sum::<f64>());
    let r = nalgebra::DVector::from_fn(m, |a, _| cols[a].iter().zip(v).map(|(x, y)| x * y).sum::<f64>());
    let c = g.svd(true, true).solve(&r, 1e-14).unwrap_or_else(|_| nalgebra::DVector::zeros(m));
    (0..v.len()).map(|n| (v[n] - (0..m).map(|a| c[a] * cols[a][n]).sum::<f64>()).abs()).fold(0.0, f64::max)
}

/// `h_B` must lie in `span{1, m_B}` and `h_X` in `span{1, P_s, V_t}` on `ω_X`.
pub fn tau_lift(
    bg: &Background,
    state: &CorrectionState,
    k: f64,
    h_b: &[f64],
    h_x: &[f64],
) -> Result<LiftedPotential, CorrectionError> {
    let m = &bg.model;
    let one_b = vec![1.0; m.ny()];
    let mb = bg.base_moment();
    let rb = span_residual(&[&one_b, &mb], h_b);
    let one = vec![1.0; m.len()];
    let ps = bg.omega.fibre_moment(m);
    let vt = bg.omega.base_moment_part(m);
    let rx = span_residual(&[&one, &ps, &vt], h_x);
    let off = rb.max(rx);
    if off > 1e-8 * sup(h_b).max(sup(h_x)).max(1.0) {
        return Err(CorrectionError::NotInLieAlgebra(off));
    }
    let hb = m.pullback(h_b);
    let lift: Vec<f64> = (0..m.len()).map(|n| k * hb[n] + h_x[n]).collect();
    let g = total_form(m, &bg.omega, &bg.base, k, None)?;
    let phi = state.potential(bg, k);
    let correction: Vec<f64> = grad_dot(m, &g, &phi, &lift).iter().map(|v| 0.5 * v).collect();
    let value = lift.iter().zip(&correction).map(|(a, b)| a + b).collect();
    Ok(LiftedPotential { k, lift, correction, value })
}

/// Largest deviation, modulo constants, between `τ` for the fibre circle and the central
/// difference in `t` of the total potential pulled back along `s ↦ s + t`.
pub fn fibre_flow_check(bg: &Background, state: &CorrectionState, k: f64, t: f64) -> Result<f64, CorrectionError> {
    let m = &bg.model;
    let ps = bg.omega.fibre_moment(m);
    let tau = tau_lift(bg, state, k, &vec![0.0; m.ny()], &ps)?;
    let (x, nx) = (m.x(), m.nx());
    let smooth: Vec<f64> = state.potential(bg, k).iter().zip(&bg.omega.potential).map(|(a, b)| a + b).collect();
    let kappa = bg.omega.scale;
    let shifted = |h: f64| -> Vec<f64> {
        let unshift: Vec<Vec<f64>> = (0..m.ny())
            .map(|_| x.iter().map(|&xi| shifted_x(xi, -h)).collect())
            .collect();
        let moved = m.resample_fibres(&smooth, &unshift);
        (0..m.len())
            .map(|n| {
                let j = n / nx;
                let xa = shifted_x(x[n % nx], bg.omega.shift[j]);
                let reference = 2.0 * kappa * ((1.0 - xa + (1.0 + xa) * h.exp()) / 2.0).ln();
                reference + moved[n] - smooth[n]
            })
            .collect()
    };
    let (p, q) = (shifted(t), shifted(-t));
    let diff: Vec<f64> = (0..m.len()).map(|n| (p[n] - q[n]) / (2.0 * t) - tau.value[n]).collect();
    // Moment maps are defined up to constants.
    let (lo, hi) = diff.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    Ok(0.5 * (hi - lo))
}
