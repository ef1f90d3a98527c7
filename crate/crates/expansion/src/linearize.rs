//! Linearized scalar curvature: base operators, the twisted Lichnerowicz
//! operator, and finite-difference probes of `S(ω_{k,1} + i∂∂̄·)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use osclab_models::field::sup;
use osclab_models::kahler::scalar_curvature;
use osclab_models::spectral::legendre;
use osclab_models::{BaseMetric, ModeField, ModelFibration, RelativeMetric, TwoFormField};
use osclab_relative::PotentialBundle;

use crate::error::ExpansionError;
use crate::exact::{scalar_at, total_form, volume_weights};
use crate::fit::{check_ladder, fit_slope};
use crate::order_one::{r_invariant, OrderOne};

/// Average over the base with respect to `ω_B`.
pub fn base_mean(model: &ModelFibration, base: &BaseMetric, f: &[f64]) -> f64 {
    let (y, w) = (model.y(), &model.base.weights);
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..y.len() {
        let a = w[j] * base.g[j] / (1.0 - y[j] * y[j]);
        num += a * f[j];
        den += a;
    }
    num / den
}

/// `Δ_B f = −D_t² f / G_B`.
pub fn base_laplacian_apply(model: &ModelFibration, base: &BaseMetric, f: &[f64]) -> Vec<f64> {
    let f2 = model.base_dt(&model.base_dt(f));
    f2.iter().zip(&base.g).map(|(a, g)| -a / g).collect()
}

/// `⟨∇u, ∇f⟩ = 2 D_t u D_t f / G_B` on the base.
pub fn base_grad_dot(model: &ModelFibration, base: &BaseMetric, u: &[f64], f: &[f64]) -> Vec<f64> {
    let (ut, ft) = (model.base_dt(u), model.base_dt(f));
    (0..u.len()).map(|j| 2.0 * ut[j] * ft[j] / base.g[j]).collect()
}

/// `D*D f = Δ²f − S Δf + ½⟨∇S, ∇f⟩` on the base curve.
pub fn base_lichnerowicz(model: &ModelFibration, base: &BaseMetric, f: &[f64]) -> Vec<f64> {
    let lf = base_laplacian_apply(model, base, f);
    let llf = base_laplacian_apply(model, base, &lf);
    let gs = base_grad_dot(model, base, &base.scalar, f);
    (0..f.len()).map(|j| llf[j] - base.scalar[j] * lf[j] + 0.5 * gs[j]).collect()
}

/// Log-frame density `α_tt(y)` of a pulled-back base form.
pub fn base_density(model: &ModelFibration, alpha: &TwoFormField) -> Result<Vec<f64>, ExpansionError> {
    let nx = model.nx();
    let nu: Vec<f64> = (0..model.ny()).map(|j| alpha.tt[j * nx]).collect();
    let pb = model.pullback(&nu);
    let off = sup(&alpha.ss).max(sup(&alpha.ts)).max(sup(&osclab_models::field::sub(&alpha.tt, &pb)));
    if off > 1e-12 * alpha.sup().max(1.0) || alpha.tt.iter().any(|v| !v.is_finite()) {
        return Err(ExpansionError::NotBaseForm(off));
    }
    Ok(nu)
}

/// `L_α(φ) = −D*Dφ + ½⟨∇Λα, ∇φ⟩ + ⟨i∂∂̄φ, α⟩` on base functions.  `α`
/// must be the pullback of a real base form.
pub fn twisted_lichnerowicz_apply(
    model: &ModelFibration,
    base: &BaseMetric,
    alpha: Option<&TwoFormField>,
    phi: &[f64],
) -> Result<Vec<f64>, ExpansionError> {
    let mut out: Vec<f64> = base_lichnerowicz(model, base, phi).into_iter().map(|v| -v).collect();
    if let Some(a) = alpha {
        let at = base_density(model, a)?;
        let la: Vec<f64> = at.iter().zip(&base.g).map(|(a, g)| a / g).collect();
        let gd = base_grad_dot(model, base, &la, phi);
        let p2 = model.base_dt(&model.base_dt(phi));
        for j in 0..phi.len() {
            out[j] += 0.5 * gd[j] + at[j] * p2[j] / (base.g[j] * base.g[j]);
        }
    }
    Ok(out)
}

/// `S(ω_B + i∂∂̄φ) − Λ α`, the twisted scalar map on the base.
pub fn twisted_scalar(
    model: &ModelFibration,
    base: &BaseMetric,
    alpha: &[f64],
    phi: &[f64],
) -> Result<Vec<f64>, ExpansionError> {
    let pot: Vec<f64> = base.potential.iter().zip(phi).map(|(a, b)| a + b).collect();
    let b = BaseMetric::with_potential(model, pot)?;
    Ok((0..phi.len()).map(|j| b.scalar[j] - alpha[j] / b.g[j]).collect())
}

/// Default finite-difference amplitude.
pub const FD_STEP: f64 = 1e-4;

/// Central difference of `S(k ω_B + ω_X + i∂∂̄(ψ₀ + t v))` at `t = 0` with
/// one Richardson step at `t = step`.  Directions are expected to carry
/// their natural `k` scaling (`k π*f` for base functions).
pub fn fd_linearization(
    model: &ModelFibration,
    omega: &RelativeMetric,
    base: &BaseMetric,
    k: f64,
    psi0: Option<&[f64]>,
    dir: &[f64],
    step: f64,
) -> Result<Vec<f64>, ExpansionError> {
    if !(1e-7..=1e-2).contains(&step) {
        return Err(ExpansionError::FdStep(step));
    }
    let size = sup(dir);
    if size == 0.0 {
        return Ok(vec![0.0; dir.len()]);
    }
    let base_pot = psi0.map(|p| p.to_vec()).unwrap_or_else(|| vec![0.0; dir.len()]);
    let central = |h: f64| -> Result<Vec<f64>, ExpansionError> {
        let plus: Vec<f64> = base_pot.iter().zip(dir).map(|(a, v)| a + h * v).collect();
        let minus: Vec<f64> = base_pot.iter().zip(dir).map(|(a, v)| a - h * v).collect();
        let sp = scalar_at(model, omega, base, k, Some(&plus))?;
        let sm = scalar_at(model, omega, base, k, Some(&minus))?;
        Ok(sp.iter().zip(&sm).map(|(a, b)| (a - b) / (2.0 * h)).collect())
    };
    let h = step;
    let d1 = central(h)?;
    let d2 = central(2.0 * h)?;
    Ok(d1.iter().zip(&d2).map(|(a, b)| (4.0 * a - b) / 3.0).collect())
}

/// Invariant sections `P_l(y) h` of `E`, `l ≤ degree`.
pub fn e_sections(model: &ModelFibration, eb: &PotentialBundle, degree: usize) -> Vec<Vec<f64>> {
    let (y, nx) = (model.y(), model.nx());
    let h = eb.invariant_potential();
    (0..=degree).map(|l| (0..model.len()).map(|n| legendre(l, y[n / nx]).0 * h[n]).collect()).collect()
}

/// Quadrature weights for `∫⟨Rφ, Rψ⟩ ω_X ∧ ω_B` with `R` as coefficient of
/// `dζ̄_t ⊗ ∂_ζs`.  The pointwise norm is the Riemannian one, `2 G_ss / G_B`,
/// matching `⟨∇f, ∇g⟩ = 2 g^{ab̄} ∂_a f ∂_b̄ g`.
pub fn r_weights(model: &ModelFibration, omega: &RelativeMetric) -> Vec<f64> {
    let tw = model.tensor_weights();
    let (x, y, nx) = (model.x(), model.y(), model.nx());
    let c = 32.0 * std::f64::consts::PI * std::f64::consts::PI;
    (0..model.len())
        .map(|n| {
            let (xi, yj) = (x[n % nx], y[n / nx]);
            c * tw[n] * omega.form.ss[n] * omega.form.ss[n] / ((1.0 - xi * xi) * (1.0 - yj * yj))
        })
        .collect()
}

/// `∫⟨R s_i, R s_j⟩` for invariant sections, straight from grid values.
pub fn r_pairing(model: &ModelFibration, omega: &RelativeMetric, sections: &[Vec<f64>]) -> DMatrix<f64> {
    let w = r_weights(model, omega);
    let r: Vec<Vec<f64>> = sections.iter().map(|s| r_invariant(model, omega, s)).collect();
    DMatrix::from_fn(r.len(), r.len(), |i, j| (0..w.len()).map(|n| w[n] * r[i][n] * r[j][n]).sum())
}

/// `∫ f g ω_X ∧ ω_B` for every pair.
fn pairing(w: &[f64], a: &[Vec<f64>], b: &[Vec<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(a.len(), b.len(), |i, j| (0..w.len()).map(|n| w[n] * a[i][n] * b[j][n]).sum())
}

/// `½⟨∇_V u, ∇_V f⟩ = D_s u D_s f / G_ss`.
pub fn vertical_grad_half(model: &ModelFibration, omega: &RelativeMetric, u: &[f64], f: &[f64]) -> Vec<f64> {
    let (us, fs) = (model.d_s(u), model.d_s(f));
    (0..u.len()).map(|n| us[n] * fs[n] / omega.form.ss[n]).collect()
}

#[derive(Debug, Clone)]
pub enum ProbeDirection {
    /// A base function `f(y)`; probed along `k π*f`.
    Base(Vec<f64>),
    /// Invariant sections of `E`.
    Fibre(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub ks: Vec<f64>,
    /// Per identity: name, relative errors over `ks`, fitted slope.
    pub identities: Vec<(String, Vec<f64>, f64)>,
    /// Largest imaginary part of the invariant-restricted linearization.
    pub reality: f64,
}

impl ProbeReport {
    pub fn worst_slope(&self) -> f64 {
        self.identities.iter().map(|(_, _, s)| *s).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Relative errors below this are at finite-difference resolution.
pub const FD_FLOOR: f64 = 1e-8;

fn slope_or_exact(ks: &[f64], errs: &[f64]) -> f64 {
    if errs.iter().all(|e| *e <= FD_FLOOR) {
        f64::NEG_INFINITY
    } else {
        fit_slope(ks, &errs.iter().map(|e| e.max(FD_FLOOR)).collect::<Vec<_>>()).0
    }
}

/// Finite-difference probes of the linearization at `ω_{k,1} = ω_k +
/// k⁻¹ i∂∂̄l₁`.
///
/// * base `f`: the `k⁰` coefficient of `S` along `k π*f` vanishes, and the
///   fibre average of the next one equals `L_α(f)` (plus the horizontal
///   drift `½⟨∇S₁, ∇f⟩` in the extremal case);
/// * sections `s_i` of `E`: `k ∫ δS(s_i) s_j` tends to
///   `−∫⟨Rs_i, Rs_j⟩ + ∫ ½⟨∇_V h₁, ∇_V s_i⟩ s_j`.
pub fn linearization_probe(
    model: &ModelFibration,
    omega: &RelativeMetric,
    base: &BaseMetric,
    order_one: &OrderOne,
    direction: &ProbeDirection,
    ks: &[f64],
) -> Result<ProbeReport, ExpansionError> {
    check_ladder(ks, 2, 2.0)?;
    let w = volume_weights(model, omega, base);
    let mut identities = Vec::new();
    let mut reality = 0.0f64;
    match direction {
        ProbeDirection::Base(f) => {
            let mut pred = twisted_lichnerowicz_apply(model, base, None, f)?;
            let drift = omega.fibre_mean(
                model,
                &horizontal_drift(model, omega, base, &order_one.s1, &model.pullback(f)),
            );
            for (p, d) in pred.iter_mut().zip(&drift) {
                *p += d;
            }
            let scale = sup(&pred).max(1e-300);
            let (mut e1, mut e2) = (Vec::new(), Vec::new());
            for &k in ks {
                let psi0: Vec<f64> = order_one.l1.iter().map(|v| v / k).collect();
                let dir: Vec<f64> = model.pullback(f).iter().map(|v| k * v).collect();
                let delta = fd_linearization(model, omega, base, k, Some(&psi0), &dir, FD_STEP)?;
                e1.push(sup(&delta) / scale);
                let m = omega.fibre_mean(model, &delta);
                e2.push(sup(&m.iter().zip(&pred).map(|(a, b)| k * a - b).collect::<Vec<_>>()) / scale);
                reality = reality.max(imaginary_part(model, omega, base, k, &psi0, &dir)?);
            }
            identities.push(("D1(f) = 0".to_string(), e1.clone(), slope_or_exact(ks, &e1)));
            identities.push(("fibre mean D2(f) = L_alpha(f)".to_string(), e2.clone(), slope_or_exact(ks, &e2)));
        }
        ProbeDirection::Fibre(sections) => {
            let m = r_pairing(model, omega, sections);
            let grads: Vec<Vec<f64>> =
                sections.iter().map(|s| vertical_grad_half(model, omega, &order_one.h1, s)).collect();
            let extra = pairing(&w, &grads, sections);
            let pred = -&m + extra;
            let scale = m.amax().max(pred.amax()).max(1e-300);
            let mut errs = Vec::new();
            for &k in ks {
                let psi0: Vec<f64> = order_one.l1.iter().map(|v| v / k).collect();
                let mut ds = Vec::with_capacity(sections.len());
                for s in sections {
                    ds.push(fd_linearization(model, omega, base, k, Some(&psi0), s, FD_STEP)?);
                    reality = reality.max(imaginary_part(model, omega, base, k, &psi0, s)?);
                }
                let f = pairing(&w, &ds, sections) * k;
                errs.push((&f - &pred).amax() / scale);
            }
            identities.push(("p D1 = -p L1".to_string(), errs.clone(), slope_or_exact(ks, &errs)));
        }
    }
    Ok(ProbeReport { ks: ks.to_vec(), identities, reality })
}

/// `½⟨∇u, ∇f⟩` through the horizontal lift `D_t − c D_s` and `ω_B`.
fn horizontal_drift(
    model: &ModelFibration,
    omega: &RelativeMetric,
    base: &BaseMetric,
    u: &[f64],
    f: &[f64],
) -> Vec<f64> {
    let g = &omega.form;
    let (ut, us, ft, fs) = (model.d_t(u), model.d_s(u), model.d_t(f), model.d_s(f));
    let gb = model.pullback(&base.g);
    (0..u.len())
        .map(|n| {
            let c = g.ts[n] / g.ss[n];
            (ut[n] - c * us[n]) * (ft[n] - c * fs[n]) / gb[n]
        })
        .collect()
}

/// Imaginary part of `g^{ab̄} ∂_a S ∂_b̄ φ` evaluated through the complex
/// mode derivatives, for an invariant `φ`.
fn imaginary_part(
    model: &ModelFibration,
    omega: &RelativeMetric,
    base: &BaseMetric,
    k: f64,
    psi0: &[f64],
    phi: &[f64],
) -> Result<f64, ExpansionError> {
    let g = total_form(model, omega, base, k, Some(psi0))?;
    let s = scalar_curvature(model, &g);
    let sm = ModeField::real(model, 0, 0, &s);
    let pm = ModeField::real(model, 0, 0, phi);
    let (st, ss) = (model.mode_dzt(&sm), model.mode_dzs(&sm));
    let (pt, ps) = (model.mode_dzbt(&pm), model.mode_dzbs(&pm));
    let mut worst = 0.0f64;
    for n in 0..g.len() {
        let det = g.tt[n] * g.ss[n] - g.ts[n] * g.ts[n];
        let v: Complex64 =
            (st.p[n] * pt.p[n] * g.ss[n] - (st.p[n] * ps.p[n] + ss.p[n] * pt.p[n]) * g.ts[n] + ss.p[n] * ps.p[n] * g.tt[n])
                / det;
        worst = worst.max(v.im.abs());
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationReport {
    pub ks: Vec<f64>,
    /// `max|F_k − F_k^φ| / max|F_k|` per `k`.
    pub differences: Vec<f64>,
    pub slope: f64,
    /// Order-one forms `k ∫ δS(s_i) s_j` without the perturbation.
    pub forms: Vec<DMatrix<f64>>,
}

/// Compares the order-one quadratic form on `E` extracted at `ω_k` and at
/// `ω_k + k⁻¹ i∂∂̄φ`.
pub fn l1_perturbation_invariance(
    model: &ModelFibration,
    omega: &RelativeMetric,
    base: &BaseMetric,
    phi: &[f64],
    sections: &[Vec<f64>],
    ks: &[f64],
) -> Result<PerturbationReport, ExpansionError> {
    check_ladder(ks, 2, 2.0)?;
    let w = volume_weights(model, omega, base);
    let mut differences = Vec::new();
    let mut forms = Vec::new();
    for &k in ks {
        let form_at = |psi0: Option<&[f64]>| -> Result<DMatrix<f64>, ExpansionError> {
            let mut ds = Vec::with_capacity(sections.len());
            for s in sections {
                ds.push(fd_linearization(model, omega, base, k, psi0, s, FD_STEP)?);
            }
            Ok(pairing(&w, &ds, sections) * k)
        };
        let f0 = form_at(None)?;
        let f1 = if sup(phi) == 0.0 {
            f0.clone()
        } else {
            let p: Vec<f64> = phi.iter().map(|v| v / k).collect();
            form_at(Some(&p))?
        };
        differences.push((&f0 - &f1).amax() / f0.amax().max(1e-300));
        forms.push(f0);
    }
    let slope = slope_or_exact(ks, &differences);
    Ok(PerturbationReport { ks: ks.to_vec(), differences, slope, forms })
}
