//! Field containers on the tensor grid.
//!
//! Values are stored base-major: index `j * nx + i` with `j` the base node
//! (`y`) and `i` the fibre node (`x`).

use num_complex::Complex64;

use crate::error::ModelError;
use crate::model::ModelFibration;

/// Torus-invariant real function on `X`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(model: &ModelFibration) -> Self {
        ScalarField { nx: model.nx(), ny: model.ny(), values: vec![0.0; model.len()] }
    }

    pub fn from_values(model: &ModelFibration, values: Vec<f64>) -> Result<Self, ModelError> {
        if values.len() != model.len() {
            return Err(ModelError::GridMismatch(format!("expected {} values, got {}", model.len(), values.len())));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(ModelError::GridMismatch(format!("non-finite value {v}")));
        }
        Ok(ScalarField { nx: model.nx(), ny: model.ny(), values })
    }

    /// `f(x, y)` sampled on the grid.
    pub fn from_fn(model: &ModelFibration, f: impl Fn(f64, f64) -> f64) -> Self {
        ScalarField { nx: model.nx(), ny: model.ny(), values: model.grid_fn(f) }
    }

    /// Pullback of a base function.
    pub fn pullback(model: &ModelFibration, base: &[f64]) -> Self {
        ScalarField { nx: model.nx(), ny: model.ny(), values: model.pullback(base) }
    }

    pub fn sup(&self) -> f64 {
        sup(&self.values)
    }

    pub fn at(&self, j: usize, i: usize) -> f64 {
        self.values[j * self.nx + i]
    }
}

pub fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(alpha: f64, x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| alpha * v).collect()
}

/// Real (1,1)-form `i Σ B_ab dζ_a ∧ dζ̄_b` in the log frame `ζ_t = log z`,
/// `ζ_s = log w` of the first affine chart.  Only the symmetric real part of
/// an invariant form is stored.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoFormField {
    pub tt: Vec<f64>,
    pub ts: Vec<f64>,
    pub ss: Vec<f64>,
}

impl TwoFormField {
    pub fn zeros(n: usize) -> Self {
        TwoFormField { tt: vec![0.0; n], ts: vec![0.0; n], ss: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.tt.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tt.is_empty()
    }

    pub fn add(&self, o: &TwoFormField) -> TwoFormField {
        TwoFormField { tt: add(&self.tt, &o.tt), ts: add(&self.ts, &o.ts), ss: add(&self.ss, &o.ss) }
    }

    pub fn sub(&self, o: &TwoFormField) -> TwoFormField {
        TwoFormField { tt: sub(&self.tt, &o.tt), ts: sub(&self.ts, &o.ts), ss: sub(&self.ss, &o.ss) }
    }

    pub fn scale(&self, a: f64) -> TwoFormField {
        TwoFormField { tt: scale(a, &self.tt), ts: scale(a, &self.ts), ss: scale(a, &self.ss) }
    }

    pub fn add_scaled(&mut self, a: f64, o: &TwoFormField) {
        axpy(a, &o.tt, &mut self.tt);
        axpy(a, &o.ts, &mut self.ts);
        axpy(a, &o.ss, &mut self.ss);
    }

    pub fn sup(&self) -> f64 {
        sup(&self.tt).max(sup(&self.ts)).max(sup(&self.ss))
    }

    /// Adds a pulled-back base form with log-frame density `nu(y)`.
    pub fn add_pullback(&mut self, model: &ModelFibration, nu: &[f64]) {
        let p = model.pullback(nu);
        axpy(1.0, &p, &mut self.tt);
    }

    /// Sup norm of `dβ` for an invariant form: `D_s B_tt − D_t B_ts` and
    /// `D_t B_ss − D_s B_ts` must vanish.
    pub fn closedness_residual(&self, model: &ModelFibration) -> f64 {
        let a = sub(&model.d_s(&self.tt), &model.d_t(&self.ts));
        let b = sub(&model.d_t(&self.ss), &model.d_s(&self.ts));
        sup(&a).max(sup(&b))
    }
}

/// Power weight `(1−x)^{ax} (1+x)^{bx} (1−y)^{ay} (1+y)^{by}` carried by a
/// mode field so that the stored reduced values stay smooth at the poles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weight {
    pub ax: f64,
    pub bx: f64,
    pub ay: f64,
    pub by: f64,
}

impl Weight {
    pub const ONE: Weight = Weight { ax: 0.0, bx: 0.0, ay: 0.0, by: 0.0 };

    /// Regularity weight of the Fourier mode `e^{i(a θ_z + b θ_w)}` on the
    /// Hirzebruch surface of degree `d`.
    pub fn mode(a: i32, b: i32, d: i32) -> Weight {
        let ex = b.unsigned_abs() as f64 / 2.0;
        Weight { ax: ex, bx: ex, ay: (a + d * b).unsigned_abs() as f64 / 2.0, by: a.unsigned_abs() as f64 / 2.0 }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        pw(1.0 - x, self.ax) * pw(1.0 + x, self.bx) * pw(1.0 - y, self.ay) * pw(1.0 + y, self.by)
    }

    pub fn times(&self, o: &Weight) -> Weight {
        Weight { ax: self.ax + o.ax, bx: self.bx + o.bx, ay: self.ay + o.ay, by: self.by + o.by }
    }

    pub fn over(&self, o: &Weight) -> Weight {
        Weight { ax: self.ax - o.ax, bx: self.bx - o.bx, ay: self.ay - o.ay, by: self.by - o.by }
    }
}

fn pw(base: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else {
        base.powf(e)
    }
}

/// One Fourier mode `e^{i(a θ_z + b θ_w)} · W · p` with reduced values `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeField {
    pub a: i32,
    pub b: i32,
    pub weight: Weight,
    pub p: Vec<Complex64>,
}

impl ModeField {
    pub fn new(model: &ModelFibration, a: i32, b: i32, p: Vec<Complex64>) -> Self {
        ModeField { a, b, weight: Weight::mode(a, b, model.d), p }
    }

    pub fn real(model: &ModelFibration, a: i32, b: i32, p: &[f64]) -> Self {
        Self::new(model, a, b, p.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    /// Actual field values at the nodes (the common phase factor omitted).
    pub fn values(&self, model: &ModelFibration) -> Vec<Complex64> {
        let (x, y) = (model.x(), model.y());
        let mut out = self.p.clone();
        for j in 0..model.ny() {
            for i in 0..model.nx() {
                out[model.idx(j, i)] *= self.weight.eval(x[i], y[j]);
            }
        }
        out
    }

    /// Re-expresses the field with another weight.
    pub fn reweight(&self, model: &ModelFibration, w: Weight) -> ModeField {
        let r = self.weight.over(&w);
        let (x, y) = (model.x(), model.y());
        let mut p = self.p.clone();
        for j in 0..model.ny() {
            for i in 0..model.nx() {
                p[model.idx(j, i)] *= r.eval(x[i], y[j]);
            }
        }
        ModeField { a: self.a, b: self.b, weight: w, p }
    }
}

impl TwoFormField {
    /// Components in the second affine chart `(1/z, w/z^d)`, re-indexed on
    /// that chart's own grid (`y' = −y`).  The map is an involution.
    pub fn other_chart(&self, model: &ModelFibration) -> TwoFormField {
        let d = model.df();
        let n = self.len();
        let mut tt = vec![0.0; n];
        let mut ts = vec![0.0; n];
        for k in 0..n {
            tt[k] = self.tt[k] + 2.0 * d * self.ts[k] + d * d * self.ss[k];
            ts[k] = -self.ts[k] - d * self.ss[k];
        }
        TwoFormField { tt: model.flip_base(&tt), ts: model.flip_base(&ts), ss: model.flip_base(&self.ss) }
    }
}
