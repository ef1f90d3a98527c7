//! Relative, base and total Kähler metrics.
//!
//! All metrics are torus-invariant and stored through their log-frame
//! matrices `G` (Hessians of the Kähler potential in `(t, s)`).
//!
//! The reference relative metric is twice the fibrewise Fubini–Study form
//! `2 i∂∂̄ log(1 + e^{σ − a(y)})`, normalized so that `Ric ω_b = ω_b`.  The
//! shift `a(y)` is the log-ratio of the two hermitian weights of the split
//! bundle; `a = 0` is the direct sum of the standard metrics.

use crate::error::ModelError;
use crate::field::{sup, TwoFormField};
use crate::model::ModelFibration;

/// Round base `ω_B = 2 i∂∂̄ log(1+|z|²)` plus an optional invariant potential.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseMetric {
    pub potential: Vec<f64>,
    /// `G_B,tt(y)`.
    pub g: Vec<f64>,
    /// Scalar curvature cache.
    pub scalar: Vec<f64>,
}

impl BaseMetric {
    pub fn with_potential(model: &ModelFibration, potential: Vec<f64>) -> Result<Self, ModelError> {
        let y = model.y();
        let u2 = model.base_dt(&model.base_dt(&potential));
        let g: Vec<f64> = y.iter().zip(&u2).map(|(y, u)| 0.5 * (1.0 - y * y) + u).collect();
        if let Some((j, v)) = g.iter().enumerate().find(|(_, v)| **v <= 0.0) {
            return Err(ModelError::Positivity { base: j, fibre: 0, eigenvalue: *v });
        }
        // Ric = −D_t² log G with the log(1−y²) part done by hand.
        let r: Vec<f64> = y.iter().zip(&g).map(|(y, g)| (2.0 * g / (1.0 - y * y)).ln()).collect();
        let rr = model.base_dt(&model.base_dt(&r));
        let scalar = (0..y.len()).map(|j| (-rr[j] + 0.5 * (1.0 - y[j] * y[j])) / g[j]).collect();
        Ok(BaseMetric { potential, g, scalar })
    }

    /// Area `∫_B ω_B`.
    pub fn area(&self, model: &ModelFibration) -> f64 {
        let (y, w) = (model.y(), &model.base.weights);
        2.0 * std::f64::consts::PI * (0..y.len()).map(|j| w[j] * self.g[j] * 2.0 / (1.0 - y[j] * y[j])).sum::<f64>()
    }
}

pub fn reference_base_metric(model: &ModelFibration) -> BaseMetric {
    BaseMetric::with_potential(model, vec![0.0; model.ny()]).expect("round metric is positive")
}

/// `ω_X = κ ω_ref(a) + i∂∂̄φ + π*ν`, with `κ = 1` unless rescaled.
#[derive(Debug, Clone, PartialEq)]
pub struct RelativeMetric {
    /// Overall scale `κ` of the reference part.
    pub scale: f64,
    /// Weight log-ratio `a(y)`.
    pub shift: Vec<f64>,
    /// Smooth potential `φ(x, y)`.
    pub potential: Vec<f64>,
    /// Base form `ν`, log-frame density `ν_tt(y)`.
    pub nu: Vec<f64>,
    pub form: TwoFormField,
    /// `G_ss / (½(1−x²))`, the smooth fibre conformal factor.
    pub gfac: Vec<f64>,
    /// Fibre volume `∫_{X_b} ω_b` per base node.
    pub fibre_volumes: Vec<f64>,
    pub volume: f64,
}

/// Shifted fibre coordinate `x_a = tanh((σ − a)/2)`.
pub fn shifted_x(x: f64, a: f64) -> f64 {
    let e = (-a).exp();
    ((1.0 + x) * e - (1.0 - x)) / ((1.0 + x) * e + (1.0 - x))
}

impl RelativeMetric {
    pub fn from_parts(
        model: &ModelFibration,
        shift: Vec<f64>,
        potential: Vec<f64>,
        nu: Vec<f64>,
    ) -> Result<Self, ModelError> {
        Self::from_parts_scaled(model, 1.0, shift, potential, nu)
    }

    pub fn from_parts_scaled(
        model: &ModelFibration,
        scale: f64,
        shift: Vec<f64>,
        potential: Vec<f64>,
        nu: Vec<f64>,
    ) -> Result<Self, ModelError> {
        let (x, y) = (model.x(), model.y());
        let (nx, ny) = (model.nx(), model.ny());
        let d = model.df();
        let at = model.base_dt(&shift);
        let att = model.base_dt(&at);
        let mut form = TwoFormField::zeros(model.len());
        for j in 0..ny {
            for i in 0..nx {
                let n = j * nx + i;
                let xa = shifted_x(x[i], shift[j]);
                let q = 0.5 * (1.0 - xa * xa);
                let lam = -0.5 * d * (1.0 + y[j]) - at[j];
                form.ss[n] = q;
                form.ts[n] = q * lam;
                form.tt[n] = q * lam * lam + (1.0 + xa) * (-0.25 * d * (1.0 - y[j] * y[j]) - att[j]);
            }
        }
        if scale != 1.0 {
            form = form.scale(scale);
        }
        if potential.iter().any(|v| *v != 0.0) {
            form.add_scaled(1.0, &model.hessian(&potential));
        }
        form.add_pullback(model, &nu);
        let gfac: Vec<f64> = (0..model.len()).map(|n| 2.0 * form.ss[n] / (1.0 - x[n % nx] * x[n % nx])).collect();
        for (n, g) in gfac.iter().enumerate() {
            if !(*g > 0.0) {
                return Err(ModelError::Positivity { base: n / nx, fibre: n % nx, eigenvalue: form.ss[n] });
            }
        }
        let wx = &model.fibre.weights;
        let fibre_volumes: Vec<f64> = (0..ny)
            .map(|j| 2.0 * std::f64::consts::PI * (0..nx).map(|i| wx[i] * gfac[j * nx + i]).sum::<f64>())
            .collect();
        let volume = fibre_volumes.iter().sum::<f64>() / ny as f64;
        Ok(RelativeMetric { scale, shift, potential, nu, form, gfac, fibre_volumes, volume })
    }

    /// Largest relative deviation of the fibre volume from its mean.
    pub fn volume_spread(&self) -> f64 {
        self.fibre_volumes.iter().fold(0.0f64, |m, v| m.max((v - self.volume).abs())) / self.volume
    }

    /// `∫_{X_b} f ω_b` for every base node.
    pub fn fibre_integral(&self, model: &ModelFibration, f: &[f64]) -> Vec<f64> {
        let (nx, ny) = (model.nx(), model.ny());
        let wx = &model.fibre.weights;
        (0..ny)
            .map(|j| {
                2.0 * std::f64::consts::PI
                    * (0..nx).map(|i| wx[i] * self.gfac[j * nx + i] * f[j * nx + i]).sum::<f64>()
            })
            .collect()
    }

    /// Fibre average `(1/V) ∫_{X_b} f ω_b`.
    pub fn fibre_mean(&self, model: &ModelFibration, f: &[f64]) -> Vec<f64> {
        self.fibre_integral(model, f).iter().zip(&self.fibre_volumes).map(|(a, v)| a / v).collect()
    }

    /// Real fibrewise `L²(ω_b)` inner product at base node `j`.
    pub fn fibre_dot(&self, model: &ModelFibration, j: usize, f: &[f64], g: &[f64]) -> f64 {
        let nx = model.nx();
        let wx = &model.fibre.weights;
        2.0 * std::f64::consts::PI * (0..nx).map(|i| wx[i] * self.gfac[j * nx + i] * f[i] * g[i]).sum::<f64>()
    }

    /// `D_s` of the full fibre potential minus one: the mean-free part of the
    /// fibre `S¹` moment map for round fibres.
    pub fn fibre_moment(&self, model: &ModelFibration) -> Vec<f64> {
        let (x, nx) = (model.x(), model.nx());
        let ds = model.d_s(&self.potential);
        (0..model.len()).map(|n| self.scale * shifted_x(x[n % nx], self.shift[n / nx]) + ds[n]).collect()
    }

    /// `D_t` of the fibre potential: the vertical part of the base `S¹`
    /// moment map.
    pub fn base_moment_part(&self, model: &ModelFibration) -> Vec<f64> {
        let (x, y, nx) = (model.x(), model.y(), model.nx());
        let d = model.df();
        let at = model.base_dt(&self.shift);
        let dt = model.d_t(&self.potential);
        (0..model.len())
            .map(|n| {
                let j = n / nx;
                let xa = shifted_x(x[n % nx], self.shift[j]);
                self.scale * (1.0 + xa) * (-0.5 * d * (1.0 + y[j]) - at[j]) + dt[n]
            })
            .collect()
    }

    pub fn with_nu(&self, model: &ModelFibration, nu: Vec<f64>) -> Result<Self, ModelError> {
        Self::from_parts_scaled(model, self.scale, self.shift.clone(), self.potential.clone(), nu)
    }

    /// `κ ω_X`: every part, including the potential and `ν`, is scaled.
    pub fn scaled(&self, model: &ModelFibration, k: f64) -> Result<Self, ModelError> {
        Self::from_parts_scaled(
            model,
            self.scale * k,
            self.shift.clone(),
            self.potential.iter().map(|v| v * k).collect(),
            self.nu.iter().map(|v| v * k).collect(),
        )
    }

    /// Same scale, new shift and potential.
    pub fn with_parts(&self, model: &ModelFibration, shift: Vec<f64>, potential: Vec<f64>) -> Result<Self, ModelError> {
        Self::from_parts_scaled(model, self.scale, shift, potential, self.nu.clone())
    }

    pub fn is_invariant_round(&self) -> bool {
        self.potential.iter().all(|v| *v == 0.0)
    }
}

pub fn reference_relative_metric(model: &ModelFibration) -> RelativeMetric {
    RelativeMetric::from_parts(model, vec![0.0; model.ny()], vec![0.0; model.len()], vec![0.0; model.ny()])
        .expect("reference metric is positive")
}

/// `ω_X + i∂∂̄φ`, failing if fibrewise positivity is lost.
pub fn perturb_metric(model: &ModelFibration, omega: &RelativeMetric, phi: &[f64]) -> Result<RelativeMetric, ModelError> {
    if phi.len() != model.len() {
        return Err(ModelError::GridMismatch(format!("potential has {} values, grid {}", phi.len(), model.len())));
    }
    let potential = omega.potential.iter().zip(phi).map(|(a, b)| a + b).collect();
    omega.with_parts(model, omega.shift.clone(), potential)
}

/// `ω_k = k ω_B + ω_X + Σ k^p i∂∂̄φ_p`.
#[derive(Debug, Clone)]
pub struct TotalMetric {
    pub k: f64,
    pub relative: RelativeMetric,
    pub base: BaseMetric,
    pub corrections: Vec<(Vec<f64>, f64)>,
    pub form: TwoFormField,
}

fn assemble(
    model: &ModelFibration,
    rel: &RelativeMetric,
    base: &BaseMetric,
    k: f64,
    corr: &TwoFormField,
) -> TwoFormField {
    let mut g = rel.form.clone();
    let gb = model.pullback(&base.g);
    for n in 0..g.len() {
        g.tt[n] += k * gb[n];
    }
    g.add_scaled(1.0, corr);
    g
}

/// Smallest of the two positivity indicators `G_ss/(½(1−x²))` and
/// `det G/(¼(1−x²)(1−y²))` over the grid, with its node.
pub fn positivity_margin(model: &ModelFibration, g: &TwoFormField) -> (f64, usize) {
    let (x, y, nx) = (model.x(), model.y(), model.nx());
    let mut worst = (f64::INFINITY, 0usize);
    for n in 0..g.len() {
        let (xi, yj) = (x[n % nx], y[n / nx]);
        let a = 2.0 * g.ss[n] / (1.0 - xi * xi);
        let det = g.tt[n] * g.ss[n] - g.ts[n] * g.ts[n];
        let q = 4.0 * det / ((1.0 - xi * xi) * (1.0 - yj * yj));
        let m = if a.is_nan() || q.is_nan() { f64::NEG_INFINITY } else { a.min(q) };
        if m < worst.0 {
            worst = (m, n);
        }
    }
    worst
}

/// Builds the total metric, or reports the smallest admissible `k` found by
/// bisection when positivity fails.
pub fn total_metric(
    model: &ModelFibration,
    rel: &RelativeMetric,
    base: &BaseMetric,
    k: f64,
    corrections: Vec<(Vec<f64>, f64)>,
) -> Result<TotalMetric, ModelError> {
    let hess: Vec<(TwoFormField, f64)> = corrections.iter().map(|(f, p)| (model.hessian(f), *p)).collect();
    let corr_at = |k: f64| {
        let mut c = TwoFormField::zeros(model.len());
        for (h, p) in &hess {
            c.add_scaled(k.powf(*p), h);
        }
        c
    };
    let form = assemble(model, rel, base, k, &corr_at(k));
    if positivity_margin(model, &form).0 > 0.0 && k > 0.0 {
        return Ok(TotalMetric { k, relative: rel.clone(), base: base.clone(), corrections, form });
    }
    let ok = |k: f64| positivity_margin(model, &assemble(model, rel, base, k, &corr_at(k))).0 > 0.0;
    let mut hi = k.max(1e-3);
    let mut found = false;
    for _ in 0..60 {
        if ok(hi) {
            found = true;
            break;
        }
        hi *= 2.0;
    }
    let k_min = if found {
        let mut lo = 0.0;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if ok(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    } else {
        f64::INFINITY
    };
    Err(ModelError::NotPositive { k, k_min })
}

impl TotalMetric {
    /// The total correction potential `Σ k^p φ_p`.
    pub fn correction_potential(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (f, p) in &self.corrections {
            let c = self.k.powf(*p);
            for (o, v) in out.iter_mut().zip(f) {
                *o += c * v;
            }
        }
        out
    }
}

/// Relative sup-norm distance between two relative metrics' forms.
pub fn form_distance(a: &RelativeMetric, b: &RelativeMetric) -> f64 {
    a.form.sub(&b.form).sup() / sup(&a.form.ss).max(1e-300)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_model, ModelConfig};

    #[test]
    fn round_base_has_unit_scalar_curvature_and_area_4pi() {
        let m = build_model(&ModelConfig::product(20)).unwrap();
        let b = reference_base_metric(&m);
        for s in &b.scalar {
            assert!((s - 1.0).abs() < 1e-12);
        }
        assert!((b.area(&m) - 4.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn shifted_reference_volume_is_constant() {
        let m = build_model(&ModelConfig::proj_bundle(1, 24)).unwrap();
        let shift = m.base_fn(|y| 0.3 * y * y - 0.1 * y);
        let r = RelativeMetric::from_parts(&m, shift, vec![0.0; m.len()], vec![0.0; m.ny()]).unwrap();
        assert!((r.volume - 4.0 * std::f64::consts::PI).abs() < 1e-10);
        assert!(r.volume_spread() < 1e-10);
    }

    #[test]
    fn small_k_with_negative_base_form_reports_k_min() {
        let m = build_model(&ModelConfig::product(12)).unwrap();
        let nu = m.base_fn(|y| -5.0 * 0.5 * (1.0 - y * y));
        let r = RelativeMetric::from_parts(&m, vec![0.0; m.ny()], vec![0.0; m.len()], nu).unwrap();
        let b = reference_base_metric(&m);
        match total_metric(&m, &r, &b, 1e-4, vec![]) {
            Err(ModelError::NotPositive { k_min, .. }) => assert!((k_min - 5.0).abs() < 1e-6, "{k_min}"),
            other => panic!("{other:?}"),
        }
    }
}
