//! The extremal operator at fixed `k`,
//!
//! ```text
//! F(ψ, ξ) = S(ω_{k,r} + i∂∂̄ψ) − η_{k,r}(ψ) − ξ₀ − ξ₁ P_t(ψ) − ξ₂ P_s(ψ),
//! ```
//!
//! its exact discrete Jacobian, a Newton polish and probes of the inverse
//! and the nonlinear remainder.

use nalgebra::{DMatrix, DVector};
use osclab_expansion::exact::volume_weights;
use osclab_expansion::fit_slope;
use osclab_models::field::sup;
use osclab_models::kahler::curvature;
use osclab_models::spectral::legendre;
use osclab_models::{ModelError, ModelFibration, TwoFormField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::CorrectionError;
use crate::state::{Background, CorrectionState};

/// `D_t` and `D_s` as dense matrices on the full grid.
pub fn derivative_matrices(model: &ModelFibration) -> (DMatrix<f64>, DMatrix<f64>) {
    let (nx, n) = (model.nx(), model.len());
    let (x, y) = (model.x(), model.y());
    let (dx, dy) = (&model.fibre.diff, &model.base.diff);
    let d = model.df();
    let ds = model.ds_matrix();
    let dt = DMatrix::from_fn(n, n, |r, c| {
        let (jr, ir, jc, ic) = (r / nx, r % nx, c / nx, c % nx);
        let mut v = 0.0;
        if ir == ic {
            v += 0.5 * (1.0 - y[jr] * y[jr]) * dy[(jr, jc)];
        }
        if jr == jc {
            v -= 0.25 * d * (1.0 + y[jr]) * (1.0 - x[ir] * x[ir]) * dx[(ir, ic)];
        }
        v
    });
    (dt, ds)
}

/// Rows `a_tt H_tt + 2 a_ts H_ts + a_ss H_ss`.
fn contract_rows(a: &TwoFormField, h: &[DMatrix<f64>; 3]) -> DMatrix<f64> {
    let n = a.len();
    DMatrix::from_fn(n, n, |r, c| a.tt[r] * h[0][(r, c)] + 2.0 * a.ts[r] * h[1][(r, c)] + a.ss[r] * h[2][(r, c)])
}

/// Derivative of `ψ ↦ S(g + Hess ψ)` on the grid, exact for the discrete
/// curvature map: `δS = −⟨G⁻¹ Ric G⁻¹, Hψ⟩ − Λ Hess(Λ Hψ)`.
pub fn scalar_jacobian(model: &ModelFibration, g: &TwoFormField, dt: &DMatrix<f64>, ds: &DMatrix<f64>) -> DMatrix<f64> {
    let h = [dt * dt, ds * dt, ds * ds];
    let ric = curvature(model, g).ricci;
    let n = g.len();
    let mut inv = TwoFormField::zeros(n);
    let mut b = TwoFormField::zeros(n);
    for q in 0..n {
        let det = g.tt[q] * g.ss[q] - g.ts[q] * g.ts[q];
        let (it, im, is) = (g.ss[q] / det, -g.ts[q] / det, g.tt[q] / det);
        inv.tt[q] = it;
        inv.ts[q] = im;
        inv.ss[q] = is;
        // G⁻¹ Ric G⁻¹ for symmetric 2×2 matrices.
        let (rt, rm, rs) = (ric.tt[q], ric.ts[q], ric.ss[q]);
        let (a11, a12) = (it * rt + im * rm, it * rm + im * rs);
        let (a21, a22) = (im * rt + is * rm, im * rm + is * rs);
        b.tt[q] = a11 * it + a12 * im;
        b.ts[q] = a11 * im + a12 * is;
        b.ss[q] = a21 * im + a22 * is;
    }
    let tb = contract_rows(&b, &h);
    let tg = contract_rows(&inv, &h);
    -(tb + &tg * &tg)
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// `F(ψ, ξ)`.
pub fn extremal_residual(
    bg: &Background,
    state: &CorrectionState,
    k: f64,
    psi: Option<&[f64]>,
    xi: [f64; 3],
) -> Result<Vec<f64>, CorrectionError> {
    let g = state.form(bg, k, psi)?;
    let s = curvature(&bg.model, &g).scalar;
    let eta = state.eta(bg, k, psi, xi);
    Ok(s.iter().zip(&eta).map(|(a, b)| a - b).collect())
}

/// Bordered, `L²`-weighted linearization of `F` at `(ψ, ξ)`: unknowns are
/// `√w δψ` and `ξ` scaled by the norms of `1, P_t, P_s`; the last three
/// rows fix `δψ ⊥ span{1, P_t, P_s}` at `ψ = 0`.
pub struct Linearization {
    pub matrix: DMatrix<f64>,
    pub sqrt_w: Vec<f64>,
    /// Norms dividing the `ξ` columns.
    pub xi_scale: [f64; 3],
    /// Jacobian of `F` in `ψ`, unweighted.
    pub jacobian: DMatrix<f64>,
}

fn weights(bg: &Background) -> Vec<f64> {
    let w = volume_weights(&bg.model, &bg.omega, &bg.base);
    let tot: f64 = w.iter().sum();
    w.iter().map(|v| v / tot).collect()
}

fn gauge_basis(bg: &Background, state: &CorrectionState, k: f64, w: &[f64]) -> Vec<Vec<f64>> {
    let phi = state.potential(bg, k);
    let (pt, ps) = bg.moments(k, &phi);
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).zip(w).map(|((x, y), w)| x * y * w).sum::<f64>();
    let mut q: Vec<Vec<f64>> = vec![];
    for v in [vec![1.0; w.len()], pt, ps] {
        let mut u = v;
        for e in &q {
            let c = dot(&u, e);
            for (a, b) in u.iter_mut().zip(e) {
                *a -= c * b;
            }
        }
        let nrm = dot(&u, &u).sqrt();
        if nrm > 1e-12 {
            q.push(u.iter().map(|v| v / nrm).collect());
        }
    }
    q
}

pub fn linearize(
    bg: &Background,
    state: &CorrectionState,
    k: f64,
    psi: &[f64],
    xi: [f64; 3],
    mats: &(DMatrix<f64>, DMatrix<f64>),
) -> Result<Linearization, CorrectionError> {
    let m = &bg.model;
    let n = m.len();
    let g = state.form(bg, k, Some(psi))?;
    let (dt, ds) = mats;
    let [_, at, as_] = state.eta_coeffs(k);
    let mut jac = scalar_jacobian(m, &g, dt, ds);
    jac -= (at + xi[1]) * dt + (as_ + xi[2]) * ds;
    let w = weights(bg);
    let sq: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
    let (pt, ps) = bg.moments(k, &add(&state.potential(bg, k), psi));
    let cols = [vec![1.0; n], pt, ps];
    let nrm = |v: &[f64]| v.iter().zip(&w).map(|(a, b)| a * a * b).sum::<f64>().sqrt();
    let xi_scale = [nrm(&cols[0]), nrm(&cols[1]), nrm(&cols[2])];
    let gauge = gauge_basis(bg, state, k, &w);
    let dim = n + 3;
    let mut a = DMatrix::zeros(dim, dim);
    for r in 0..n {
        for c in 0..n {
            a[(r, c)] = sq[r] * jac[(r, c)] / sq[c];
        }
        for i in 0..3 {
            a[(r, n + i)] = -sq[r] * cols[i][r] / xi_scale[i].max(1e-300);
        }
    }
    for (i, q) in gauge.iter().enumerate() {
        for c in 0..n {
            a[(n + i, c)] = sq[c] * q[c];
        }
    }
    Ok(Linearization { matrix: a, sqrt_w: sq, xi_scale, jacobian: jac })
}

/// Singular values below this fraction of the largest may be collocation
/// modes with no smooth counterpart.
pub const SPURIOUS_TOL: f64 = 1e-13;

/// Most spurious modes a linearization may carry.
pub const MAX_SPURIOUS: usize = 6;

/// Number of spurious singular values: among those below
/// `SPURIOUS_TOL σ_max`, the split at the widest multiplicative gap.
pub fn spurious_count(singular_values: &[f64]) -> usize {
    let mut s = singular_values.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let top = s.last().cloned().unwrap_or(0.0);
    let floor = 1e-18 * top;
    let cand = s.iter().take_while(|v| **v <= SPURIOUS_TOL * top).count().min(MAX_SPURIOUS + 1);
    let mut best = (0usize, 1.0f64);
    for m in 1..=cand.min(s.len() - 1) {
        let gap = s[m] / s[m - 1].max(floor);
        if gap > best.1 {
            best = (m, gap);
        }
    }
    best.0
}

/// Minimum-norm solve discarding the spurious modes.
fn truncated_solve(a: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>, CorrectionError> {
    let svd = a.clone().svd(true, true);
    let sv: Vec<f64> = svd.singular_values.iter().cloned().collect();
    let m = spurious_count(&sv);
    if m > MAX_SPURIOUS {
        return Err(CorrectionError::Singular(0.0));
    }
    let mut sorted = sv.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let cut = if m == 0 { 0.0 } else { (sorted[m - 1].max(1e-300) * sorted[m]).sqrt() };
    let sol = svd.solve(rhs, cut).map_err(|_| CorrectionError::Singular(0.0))?;
    if sol.iter().all(|v| v.is_finite()) {
        Ok(sol)
    } else {
        Err(CorrectionError::Singular(0.0))
    }
}

/// Smallest singular value that is not spurious.
pub fn smallest_regular(singular_values: &[f64]) -> f64 {
    let mut s = singular_values.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    s[spurious_count(&s)]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolishOptions {
    pub max_steps: usize,
    pub tol: f64,
}

impl Default for PolishOptions {
    fn default() -> Self {
        PolishOptions { max_steps: 10, tol: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolishReport {
    pub k: f64,
    /// `‖F‖_sup` before each step and after the last.
    pub residuals: Vec<f64>,
    /// Accepted damping per step.
    pub damping: Vec<f64>,
    pub psi: Vec<f64>,
    pub xi: [f64; 3],
    pub converged: bool,
}

/// Damped Newton on `(ψ, ξ)` from `(0, 0)`.
pub fn newton_polish(
    bg: &Background,
    state: &CorrectionState,
    k: f64,
    opts: &PolishOptions,
) -> Result<PolishReport, CorrectionError> {
    let n = bg.model.len();
    let mats = derivative_matrices(&bg.model);
    let mut psi = vec![0.0; n];
    let mut xi = [0.0; 3];
    let mut f = extremal_residual(bg, state, k, Some(&psi), xi)?;
    let mut res = sup(&f);
    let mut residuals = vec![res];
    let mut damping = vec![];
    for step in 0..opts.max_steps {
        if res <= opts.tol {
            break;
        }
        let lin = linearize(bg, state, k, &psi, xi, &mats)?;
        let mut rhs = DVector::zeros(n + 3);
        for q in 0..n {
            rhs[q] = -lin.sqrt_w[q] * f[q];
        }
        let sol = truncated_solve(&lin.matrix, &rhs)?;
        let dpsi: Vec<f64> = (0..n).map(|q| sol[q] / lin.sqrt_w[q]).collect();
        let dxi: Vec<f64> = (0..3).map(|i| sol[n + i] / lin.xi_scale[i].max(1e-300)).collect();
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let p: Vec<f64> = psi.iter().zip(&dpsi).map(|(a, b)| a + t * b).collect();
            let x = [xi[0] + t * dxi[0], xi[1] + t * dxi[1], xi[2] + t * dxi[2]];
            match extremal_residual(bg, state, k, Some(&p), x) {
                Ok(fnew) if sup(&fnew) < res => {
                    accepted = Some((p, x, fnew));
                    break;
                }
                Ok(_) | Err(CorrectionError::Expansion(_)) | Err(CorrectionError::Model(ModelError::NotPositive { .. })) => {
                    t *= 0.5
                }
                Err(e) => return Err(e),
            }
        }
        let (p, x, fnew) = accepted.ok_or(CorrectionError::LineSearch { step, residual: res })?;
        psi = p;
        xi = x;
        f = fnew;
        res = sup(&f);
        residuals.push(res);
        damping.push(t);
    }
    Ok(PolishReport { k, converged: res <= opts.tol, residuals, damping, psi, xi })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormProbe {
    pub ks: Vec<f64>,
    /// `1/σ_min` of the bordered weighted linearization.
    pub inverse_norms: Vec<f64>,
    pub slope: f64,
}

pub fn norm_probe(bg: &Background, state: &CorrectionState, ks: &[f64]) -> Result<NormProbe, CorrectionError> {
    let mats = derivative_matrices(&bg.model);
    let zero = vec![0.0; bg.model.len()];
    let mut inverse_norms = vec![];
    for &k in ks {
        let lin = linearize(bg, state, k, &zero, [0.0; 3], &mats)?;
        let sv: Vec<f64> = lin.matrix.singular_values().iter().cloned().collect();
        let smin = smallest_regular(&sv);
        if !(smin > 0.0) {
            return Err(CorrectionError::Singular(smin));
        }
        inverse_norms.push(1.0 / smin);
    }
    let slope = if ks.len() >= 2 { fit_slope(ks, &inverse_norms).0 } else { f64::NAN };
    Ok(NormProbe { ks: ks.to_vec(), inverse_norms, slope })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzReport {
    pub k: f64,
    pub radius: f64,
    pub ratios: Vec<f64>,
    pub max: f64,
}

/// Smooth random invariant function `Σ c_ab P_a(x) P_b(y)`, `a, b ≤ 3`.
pub fn random_field(model: &ModelFibration, rng: &mut impl Rng) -> Vec<f64> {
    let c: Vec<f64> = (0..16).map(|_| rng.gen_range(-1.0..1.0)).collect();
    model.grid_fn(|x, y| {
        let mut s = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                s += c[4 * a + b] * legendre(a, x).0 * legendre(b, y).0;
            }
        }
        s
    })
}

/// Ratios `‖N(φ) − N(ψ)‖ / ((‖φ‖ + ‖ψ‖) ‖φ − ψ‖)` for the remainder
/// `N(φ) = F(φ) − F(0) − DF(0)φ`, over random pairs in the `L²` ball of the
/// given radius.
pub fn lipschitz_probe(
    bg: &Background,
    state: &CorrectionState,
    k: f64,
    pairs: usize,
    radius: f64,
    seed: u64,
) -> Result<LipschitzReport, CorrectionError> {
    let n = bg.model.len();
    let mats = derivative_matrices(&bg.model);
    let zero = vec![0.0; n];
    let lin = linearize(bg, state, k, &zero, [0.0; 3], &mats)?;
    let f0 = extremal_residual(bg, state, k, None, [0.0; 3])?;
    let w = weights(bg);
    let norm = |v: &[f64]| v.iter().zip(&w).map(|(a, b)| a * a * b).sum::<f64>().sqrt();
    let remainder = |phi: &[f64]| -> Result<Vec<f64>, CorrectionError> {
        let f = extremal_residual(bg, state, k, Some(phi), [0.0; 3])?;
        let jp = &lin.jacobian * DVector::from_column_slice(phi);
        Ok((0..n).map(|q| f[q] - f0[q] - jp[q]).collect())
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| {
        let v = random_field(&bg.model, rng);
        let s = radius * rng.gen_range(0.1..1.0) / norm(&v);
        v.iter().map(|a| a * s).collect::<Vec<f64>>()
    };
    let mut ratios = vec![];
    for _ in 0..pairs {
        let phi = draw(&mut rng);
        let psi = draw(&mut rng);
        ratios.push(remainder_ratio(&remainder(&phi)?, &remainder(&psi)?, &phi, &psi, &norm));
    }
    let max = ratios.iter().cloned().fold(0.0, f64::max);
    Ok(LipschitzReport { k, radius, ratios, max })
}

/// The Lipschitz quotient for one pair; `0` when `φ = ψ`.
pub fn remainder_ratio(nphi: &[f64], npsi: &[f64], phi: &[f64], psi: &[f64], norm: &dyn Fn(&[f64]) -> f64) -> f64 {
    let dn: Vec<f64> = nphi.iter().zip(npsi).map(|(a, b)| a - b).collect();
    let dp: Vec<f64> = phi.iter().zip(psi).map(|(a, b)| a - b).collect();
    let den = (norm(phi) + norm(psi)) * norm(&dp);
    if den == 0.0 {
        0.0
    } else {
        norm(&dn) / den
    }
}
