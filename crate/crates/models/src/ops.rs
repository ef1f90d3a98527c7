//! Differential operators on grid fields.
//!
//! `D_s = ∂/∂s` and `D_t = ∂/∂t` are log-coordinate derivatives at fixed
//! `s`, `t` respectively; in grid variables
//!
//! ```text
//! D_s = ½(1−x²) ∂_x
//! D_t = ½(1−y²) ∂_y − ¼ d (1+y)(1−x²) ∂_x
//! ```
//!
//! They commute, and the Hessian of an invariant function in `(t, s)` is the
//! log-frame matrix of `i∂∂̄f`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::field::{ModeField, TwoFormField, Weight};
use crate::model::ModelFibration;

impl ModelFibration {
    /// `f(x, y)` on the grid.
    pub fn grid_fn(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let (x, y) = (self.x(), self.y());
        let mut out = Vec::with_capacity(self.len());
        for &yj in y {
            for &xi in x {
                out.push(f(xi, yj));
            }
        }
        out
    }

    pub fn base_fn(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.y().iter().map(|&y| f(y)).collect()
    }

    pub fn fibre_fn(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.x().iter().map(|&x| f(x)).collect()
    }

    pub fn pullback(&self, base: &[f64]) -> Vec<f64> {
        let nx = self.nx();
        let mut out = vec![0.0; self.len()];
        for (j, &b) in base.iter().enumerate() {
            out[j * nx..(j + 1) * nx].fill(b);
        }
        out
    }

    /// Fibre row `j` of a field.
    pub fn row<'a, T>(&self, f: &'a [T], j: usize) -> &'a [T] {
        &f[j * self.nx()..(j + 1) * self.nx()]
    }

    pub fn dx(&self, f: &[f64]) -> Vec<f64> {
        let (nx, ny) = (self.nx(), self.ny());
        let d = &self.fibre.diff;
        let mut out = vec![0.0; self.len()];
        for j in 0..ny {
            let r = &f[j * nx..(j + 1) * nx];
            for i in 0..nx {
                let mut s = 0.0;
                for (k, v) in r.iter().enumerate() {
                    s += d[(i, k)] * v;
                }
                out[j * nx + i] = s;
            }
        }
        out
    }

    pub fn dy(&self, f: &[f64]) -> Vec<f64> {
        let (nx, ny) = (self.nx(), self.ny());
        let d = &self.base.diff;
        let mut out = vec![0.0; self.len()];
        for j in 0..ny {
            for k in 0..ny {
                let c = d[(j, k)];
                if c == 0.0 {
                    continue;
                }
                for i in 0..nx {
                    out[j * nx + i] += c * f[k * nx + i];
                }
            }
        }
        out
    }

    pub fn d_s(&self, f: &[f64]) -> Vec<f64> {
        let fx = self.dx(f);
        let x = self.x();
        let nx = self.nx();
        fx.iter().enumerate().map(|(n, v)| 0.5 * (1.0 - x[n % nx] * x[n % nx]) * v).collect()
    }

    pub fn d_t(&self, f: &[f64]) -> Vec<f64> {
        let fx = self.dx(f);
        let fy = self.dy(f);
        let (x, y) = (self.x(), self.y());
        let nx = self.nx();
        let d = self.df();
        (0..self.len())
            .map(|n| {
                let (xi, yj) = (x[n % nx], y[n / nx]);
                0.5 * (1.0 - yj * yj) * fy[n] - 0.25 * d * (1.0 + yj) * (1.0 - xi * xi) * fx[n]
            })
            .collect()
    }

    /// Log-frame Hessian `[[D_t²f, D_tD_sf], [·, D_s²f]]`.
    pub fn hessian(&self, f: &[f64]) -> TwoFormField {
        let fs = self.d_s(f);
        let ft = self.d_t(f);
        TwoFormField { tt: self.d_t(&ft), ts: self.d_s(&ft), ss: self.d_s(&fs) }
    }

    /// Derivative of a base function in `y`.
    pub fn base_dy(&self, b: &[f64]) -> Vec<f64> {
        let d = &self.base.diff;
        (0..self.ny()).map(|j| (0..self.ny()).map(|k| d[(j, k)] * b[k]).sum()).collect()
    }

    /// `D_t` of a base function.
    pub fn base_dt(&self, b: &[f64]) -> Vec<f64> {
        let by = self.base_dy(b);
        self.y().iter().zip(by).map(|(y, v)| 0.5 * (1.0 - y * y) * v).collect()
    }

    /// Derivative in `x` of a single fibre line.
    pub fn fibre_dx(&self, f: &[f64]) -> Vec<f64> {
        let d = &self.fibre.diff;
        (0..self.nx()).map(|i| (0..self.nx()).map(|k| d[(i, k)] * f[k]).sum()).collect()
    }

    /// `D_s` of a single fibre line.
    pub fn fibre_ds(&self, f: &[f64]) -> Vec<f64> {
        let fx = self.fibre_dx(f);
        self.x().iter().zip(fx).map(|(x, v)| 0.5 * (1.0 - x * x) * v).collect()
    }

    pub fn dx_c(&self, f: &[Complex64]) -> Vec<Complex64> {
        let re: Vec<f64> = f.iter().map(|c| c.re).collect();
        let im: Vec<f64> = f.iter().map(|c| c.im).collect();
        join(self.dx(&re), self.dx(&im))
    }

    pub fn dy_c(&self, f: &[Complex64]) -> Vec<Complex64> {
        let re: Vec<f64> = f.iter().map(|c| c.re).collect();
        let im: Vec<f64> = f.iter().map(|c| c.im).collect();
        join(self.dy(&re), self.dy(&im))
    }

    /// Reduced values of `(D_s + m) (W p)` in the weight `W` of `f`.
    pub fn mode_ds(&self, f: &ModeField, m: f64) -> ModeField {
        let px = self.dx_c(&f.p);
        let x = self.x();
        let nx = self.nx();
        let w = f.weight;
        let p = (0..self.len())
            .map(|n| {
                let xi = x[n % nx];
                px[n] * (0.5 * (1.0 - xi * xi)) + f.p[n] * (0.5 * (w.bx * (1.0 - xi) - w.ax * (1.0 + xi)) + m)
            })
            .collect();
        ModeField { a: f.a, b: f.b, weight: w, p }
    }

    /// Reduced values of `(D_t + m) (W p)`.
    pub fn mode_dt(&self, f: &ModeField, m: f64) -> ModeField {
        let px = self.dx_c(&f.p);
        let py = self.dy_c(&f.p);
        let (x, y) = (self.x(), self.y());
        let nx = self.nx();
        let d = self.df();
        let w = f.weight;
        let p = (0..self.len())
            .map(|n| {
                let (xi, yj) = (x[n % nx], y[n / nx]);
                let xpart = px[n] * (1.0 - xi * xi) + f.p[n] * (w.bx * (1.0 - xi) - w.ax * (1.0 + xi));
                py[n] * (0.5 * (1.0 - yj * yj))
                    + f.p[n] * (0.5 * (w.by * (1.0 - yj) - w.ay * (1.0 + yj)) + m)
                    - xpart * (0.25 * d * (1.0 + yj))
            })
            .collect();
        ModeField { a: f.a, b: f.b, weight: w, p }
    }

    /// `∂/∂ζ_s` on a mode.
    pub fn mode_dzs(&self, f: &ModeField) -> ModeField {
        self.mode_ds(f, f.b as f64 / 2.0)
    }

    /// `∂/∂ζ̄_s` on a mode.
    pub fn mode_dzbs(&self, f: &ModeField) -> ModeField {
        self.mode_ds(f, -(f.b as f64) / 2.0)
    }

    pub fn mode_dzt(&self, f: &ModeField) -> ModeField {
        self.mode_dt(f, f.a as f64 / 2.0)
    }

    pub fn mode_dzbt(&self, f: &ModeField) -> ModeField {
        self.mode_dt(f, -(f.a as f64) / 2.0)
    }

    /// Multiplies a mode by a real grid function `g = c · W_g · r` with the
    /// weight of the product updated.
    pub fn mode_mul(&self, f: &ModeField, r: &[f64], wg: Weight) -> ModeField {
        ModeField {
            a: f.a,
            b: f.b,
            weight: f.weight.times(&wg),
            p: f.p.iter().zip(r).map(|(p, r)| p * r).collect(),
        }
    }

    /// Grid-space quadrature weights `w_i w_j` in `(x, y)`.
    pub fn tensor_weights(&self) -> Vec<f64> {
        let (wx, wy) = (&self.fibre.weights, &self.base.weights);
        let mut out = Vec::with_capacity(self.len());
        for wj in wy {
            for wi in wx {
                out.push(wi * wj);
            }
        }
        out
    }

    /// Evaluates each fibre line at the points `targets[j]` (one target set
    /// per base node) by barycentric interpolation.
    pub fn resample_fibres(&self, f: &[f64], targets: &[Vec<f64>]) -> Vec<f64> {
        let nx = self.nx();
        let mut out = Vec::with_capacity(self.len());
        for (j, t) in targets.iter().enumerate() {
            let m = crate::spectral::interp_matrix(self.x(), t);
            let r = &f[j * nx..(j + 1) * nx];
            for row in 0..t.len() {
                out.push((0..nx).map(|k| m[(row, k)] * r[k]).sum::<f64>());
            }
        }
        out
    }

    /// Reverses the base direction, `y ↦ −y`.  Gauss–Legendre nodes are
    /// symmetric so this is an index permutation.
    pub fn flip_base(&self, f: &[f64]) -> Vec<f64> {
        let (nx, ny) = (self.nx(), self.ny());
        let mut out = vec![0.0; self.len()];
        for j in 0..ny {
            out[(ny - 1 - j) * nx..(ny - j) * nx].copy_from_slice(&f[j * nx..(j + 1) * nx]);
        }
        out
    }

    /// Dense matrix of `D_s` acting on the full grid.
    pub fn ds_matrix(&self) -> DMatrix<f64> {
        let n = self.len();
        let nx = self.nx();
        let x = self.x();
        let d = &self.fibre.diff;
        DMatrix::from_fn(n, n, |r, c| {
            if r / nx != c / nx {
                0.0
            } else {
                let (i, k) = (r % nx, c % nx);
                0.5 * (1.0 - x[i] * x[i]) * d[(i, k)]
            }
        })
    }
}

fn join(re: Vec<f64>, im: Vec<f64>) -> Vec<Complex64> {
    re.into_iter().zip(im).map(|(a, b)| Complex64::new(a, b)).collect()
}

#[cfg(test)]
mod tests {
    use crate::model::{build_model, ModelConfig};

    #[test]
    fn log_derivatives_match_closed_forms() {
        let m = build_model(&ModelConfig::proj_bundle(1, 16)).unwrap();
        // D_s x = ½(1−x²); D_t y = ½(1−y²); D_t x = −¼(1+y)(1−x²)
        let x = m.grid_fn(|x, _| x);
        let y = m.grid_fn(|_, y| y);
        let dsx = m.d_s(&x);
        let dty = m.d_t(&y);
        let dtx = m.d_t(&x);
        let e1 = m.grid_fn(|x, _| 0.5 * (1.0 - x * x));
        let e2 = m.grid_fn(|_, y| 0.5 * (1.0 - y * y));
        let e3 = m.grid_fn(|x, y| -0.25 * (1.0 + y) * (1.0 - x * x));
        for n in 0..m.len() {
            assert!((dsx[n] - e1[n]).abs() < 1e-13);
            assert!((dty[n] - e2[n]).abs() < 1e-13);
            assert!((dtx[n] - e3[n]).abs() < 1e-13);
        }
    }

    #[test]
    fn log_derivatives_commute() {
        let m = build_model(&ModelConfig::proj_bundle(2, 16)).unwrap();
        let f = m.grid_fn(|x, y| (0.3 * x + 0.2 * y).sin() + x * x * y);
        let a = m.d_t(&m.d_s(&f));
        let b = m.d_s(&m.d_t(&f));
        for n in 0..m.len() {
            assert!((a[n] - b[n]).abs() < 1e-11);
        }
    }
}
