//! The operator `R(f) = ∂̄_B(∇_V^{1,0} f)` on sections of `E`.
//!
//! For an invariant `f` the vertical gradient is `(D_s f / G_ss) ∂_ζs` and
//! `∂_ζs = w∂_w` is holomorphic, so `R(f) = D_t(∂_x f / g)` with `g` the
//! fibre conformal factor.  Mode sections `e^{i(aθ_z + bθ_w)} (…)` are
//! handled by [`r_apply_mode`].

use nalgebra::DMatrix;
use num_complex::Complex64;
use osclab_models::field::sup;
use osclab_models::{ModeField, ModelFibration, RelativeMetric, Weight};
use osclab_models::spectral::legendre;
use osclab_relative::{fibrewise_lichnerowicz, PotentialBundle};

use crate::error::OscError;

pub fn r_apply(model: &ModelFibration, omega: &RelativeMetric, f: &[f64]) -> Result<Vec<f64>, OscError> {
    let lich = sup(&fibrewise_lichnerowicz(model, omega, f));
    if lich > 1e-6 * sup(f).max(1.0) {
        return Err(OscError::NotInE(lich));
    }
    Ok(r_apply_unchecked(model, omega, f).0)
}

/// `(R f, v)` with `v = D_s f / G_ss`.
pub(crate) fn r_apply_unchecked(model: &ModelFibration, omega: &RelativeMetric, f: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let fx = model.dx(f);
    let v: Vec<f64> = fx.iter().zip(&omega.gfac).map(|(a, g)| a / g).collect();
    (model.d_t(&v), v)
}

/// `R` on the mode section `e^{i(aθ_z + bθ_w)} W_{a,b} p`.  The result is
/// returned as actual (weighted) values at the nodes.
pub fn r_apply_mode(model: &ModelFibration, omega: &RelativeMetric, f: &ModeField) -> Vec<Complex64> {
    let x = model.x();
    let nx = model.nx();
    let b = f.b as f64;
    let g1 = model.mode_dzbs(f);
    // divide by G_ss = ½(1−x²) g, moving the weight to (1−x)^{−b/2}(1+x)^{b/2}
    let wv = Weight { ax: -b / 2.0, bx: b / 2.0, ay: f.weight.ay, by: f.weight.by };
    let p: Vec<Complex64> = (0..model.len())
        .map(|n| {
            let xi = x[n % nx];
            let conv = f.weight.over(&wv).eval(xi, 0.0);
            g1.p[n] * conv / (0.5 * (1.0 - xi * xi) * omega.gfac[n])
        })
        .collect();
    let v = ModeField { a: f.a, b: f.b, weight: wv, p };
    model.mode_dzbt(&v).values(model)
}

/// Dimension of `ker R` on sections of `E` built from the basis potentials
/// times Legendre polynomials of degree `≤ degree` in `y`, over the modes
/// `|a| ≤ max_a`.
pub fn r_kernel_dimension(
    model: &ModelFibration,
    omega: &RelativeMetric,
    eb: &PotentialBundle,
    max_a: i32,
    degree: usize,
) -> usize {
    let nx = model.nx();
    let y = model.y();
    let tw = model.tensor_weights();
    let mut dim = 0;
    for (k, &b) in eb.modes.iter().enumerate() {
        for a in -max_a..=max_a {
            let cols: Vec<Vec<Complex64>> = (0..=degree)
                .map(|l| {
                    let p: Vec<Complex64> =
                        (0..model.len()).map(|n| Complex64::new(legendre(l, y[n / nx]).0 * eb.basis[k][n], 0.0)).collect();
                    let f = ModeField::new(model, a, b, p);
                    let norm = f.values(model).iter().zip(&tw).map(|(v, w)| v.norm_sqr() * w).sum::<f64>().sqrt();
                    r_apply_mode(model, omega, &f).into_iter().map(|v| v / norm).collect()
                })
                .collect();
            let rows = model.len();
            let m = DMatrix::from_fn(2 * rows, cols.len(), |r, c| {
                let v = cols[c][r % rows];
                if r < rows { v.re * tw[r].sqrt() } else { v.im * tw[r - rows].sqrt() }
            });
            let sv = m.svd(false, false).singular_values;
            let smax = sv.max().max(1e-300);
            dim += sv.iter().filter(|s| **s < 1e-6 * smax.max(1.0)).count();
        }
    }
    dim
}

/// `Σ_{i,j} h⁰(O(d_j − d_i)) − 1` for `E = O(d_0) ⊕ O(d_1)` on `P¹`: the
/// number of global vertical holomorphic fields.
pub fn split_bundle_oracle(degrees: &[i32]) -> usize {
    let mut n = 0;
    for &di in degrees {
        for &dj in degrees {
            n += (dj - di + 1).max(0) as usize;
        }
    }
    n - 1
}
