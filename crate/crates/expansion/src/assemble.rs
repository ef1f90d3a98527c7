//! Galerkin assembly of `p∘L₁` on sections of `E`.
//!
//! Sections are `e^{i(aθ_z + bθ_w)} W_{a,b} P_l(y) h_b` with `h_b` the basis
//! potential of mode `b`, `|a| ≤ max_a` and `l < N`.  The matrix is the
//! quadratic form `∫⟨Rφ, Rψ⟩ ω_X ∧ ω_B`; distinct modes `(a, b)` are
//! orthogonal, so it is block diagonal.

use nalgebra::DMatrix;
use num_complex::Complex64;
use osclab_models::spectral::legendre;
use osclab_models::{BaseMetric, ModeField, ModelFibration, RelativeMetric};
use osclab_relative::PotentialBundle;

use crate::error::ExpansionError;
use crate::exact::volume_weights;
use crate::linearize::{r_pairing, r_weights};

/// Relative singular-value threshold for nullspace counting.
pub const NULL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasisElement {
    pub a: i32,
    pub b: i32,
    pub l: usize,
}

#[derive(Debug, Clone)]
pub struct AssembledOperator {
    pub basis: Vec<BasisElement>,
    pub matrix: DMatrix<f64>,
    pub mass: DMatrix<f64>,
    /// Generalized eigenvalues `M c = λ Mass c`, ascending.
    pub spectrum: Vec<f64>,
    pub nullity: usize,
    /// `‖M − Mᵀ‖ / ‖M‖`.
    pub asymmetry: f64,
    pub mass_condition: f64,
}

impl AssembledOperator {
    /// `cᵀ M d`.
    pub fn form(&self, c: &[f64], d: &[f64]) -> f64 {
        let n = c.len();
        (0..n).map(|i| (0..n).map(|j| c[i] * self.matrix[(i, j)] * d[j]).sum::<f64>()).sum()
    }

    /// Indices of the invariant elements `a = b = 0`, by degree.
    pub fn invariant_indices(&self) -> Vec<usize> {
        (0..self.basis.len()).filter(|&i| self.basis[i].a == 0 && self.basis[i].b == 0).collect()
    }

    pub fn spectrum_csv(&self) -> String {
        let mut s = String::from("index,eigenvalue\n");
        for (i, v) in self.spectrum.iter().enumerate() {
            s.push_str(&format!("{i},{v:e}\n"));
        }
        s
    }
}

fn section(model: &ModelFibration, eb: &PotentialBundle, e: BasisElement) -> ModeField {
    let (y, nx) = (model.y(), model.nx());
    let m = eb.modes.iter().position(|&b| b == e.b).expect("mode present");
    let p = (0..model.len()).map(|n| Complex64::new(legendre(e.l, y[n / nx]).0 * eb.basis[m][n], 0.0)).collect();
    ModeField::new(model, e.a, e.b, p)
}

/// Values of `R` on a mode section, by the complex mode calculus.
fn r_mode(model: &ModelFibration, omega: &RelativeMetric, f: &ModeField) -> Vec<Complex64> {
    let x = model.x();
    let nx = model.nx();
    let b = f.b as f64;
    let g1 = model.mode_dzbs(f);
    let wv = osclab_models::Weight { ax: -b / 2.0, bx: b / 2.0, ay: f.weight.ay, by: f.weight.by };
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

pub fn assemble_pl1(
    model: &ModelFibration,
    omega: &RelativeMetric,
    base: &BaseMetric,
    eb: &PotentialBundle,
    n: usize,
    max_a: i32,
) -> Result<AssembledOperator, ExpansionError> {
    if n < 4 {
        return Err(ExpansionError::BasisTooSmall(n));
    }
    let mut basis = Vec::new();
    for &b in &eb.modes {
        for a in -max_a..=max_a {
            for l in 0..n {
                basis.push(BasisElement { a, b, l });
            }
        }
    }
    let wr = r_weights(model, omega);
    let wv = volume_weights(model, omega, base);
    let fields: Vec<(Vec<Complex64>, Vec<Complex64>)> = basis
        .iter()
        .map(|&e| {
            let f = section(model, eb, e);
            (f.values(model), r_mode(model, omega, &f))
        })
        .collect();
    let dim = basis.len();
    let mut matrix = DMatrix::zeros(dim, dim);
    let mut mass = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in i..dim {
            if basis[i].a != basis[j].a || basis[i].b != basis[j].b {
                continue;
            }
            let (fi, ri) = &fields[i];
            let (fj, rj) = &fields[j];
            let mut m = 0.0;
            let mut s = 0.0;
            for k in 0..wr.len() {
                m += wr[k] * (ri[k].conj() * rj[k]).re;
                s += wv[k] * (fi[k].conj() * fj[k]).re;
            }
            matrix[(i, j)] = m;
            mass[(i, j)] = s;
            mass[(j, i)] = s;
        }
    }
    for i in 0..dim {
        for j in 0..i {
            if basis[i].a != basis[j].a || basis[i].b != basis[j].b {
                continue;
            }
            let (_, ri) = &fields[i];
            let (_, rj) = &fields[j];
            matrix[(i, j)] = (0..wr.len()).map(|k| wr[k] * (ri[k].conj() * rj[k]).re).sum();
        }
    }
    let asymmetry = (&matrix - matrix.transpose()).amax() / matrix.amax().max(1e-300);
    let mev = mass.clone().symmetric_eigenvalues();
    let mass_condition = mev.max() / mev.min();
    if !(mass_condition < 1e12) || mev.min() <= 0.0 {
        return Err(ExpansionError::MassConditioning(mass_condition));
    }
    let chol = mass.clone().cholesky().ok_or(ExpansionError::MassConditioning(mass_condition))?;
    let linv = chol.l().try_inverse().ok_or(ExpansionError::MassConditioning(mass_condition))?;
    let sym = 0.5 * (&matrix + matrix.transpose());
    let reduced = &linv * sym * linv.transpose();
    let mut spectrum: Vec<f64> = reduced.symmetric_eigenvalues().iter().cloned().collect();
    spectrum.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let top = spectrum.last().cloned().unwrap_or(0.0).max(1e-300);
    let nullity = spectrum.iter().filter(|v| v.abs().sqrt() < NULL_TOL * top.sqrt()).count();
    Ok(AssembledOperator { basis, matrix, mass, spectrum, nullity, asymmetry, mass_condition })
}

/// Assembled form against an independent grid evaluation of
/// `∫⟨Rφ, Rψ⟩` on the invariant block, for the coefficient pairs given.
pub fn quadratic_form_gap(
    model: &ModelFibration,
    omega: &RelativeMetric,
    eb: &PotentialBundle,
    op: &AssembledOperator,
    pairs: &[(Vec<f64>, Vec<f64>)],
) -> f64 {
    let idx = op.invariant_indices();
    let (y, nx) = (model.y(), model.nx());
    let h = eb.invariant_potential();
    let build = |c: &[f64]| -> Vec<f64> {
        (0..model.len())
            .map(|n| idx.iter().zip(c).map(|(&i, ci)| ci * legendre(op.basis[i].l, y[n / nx]).0).sum::<f64>() * h[n])
            .collect()
    };
    let mut worst = 0.0f64;
    for (c, d) in pairs {
        let direct = r_pairing(model, omega, &[build(c), build(d)])[(0, 1)];
        let mut full_c = vec![0.0; op.basis.len()];
        let mut full_d = vec![0.0; op.basis.len()];
        for (k, &i) in idx.iter().enumerate() {
            full_c[i] = c[k];
            full_d[i] = d[k];
        }
        let assembled = op.form(&full_c, &full_d);
        let scale = op.form(&full_c, &full_c).abs().max(op.form(&full_d, &full_d).abs()).max(1e-300);
        worst = worst.max((assembled - direct).abs() / scale);
    }
    worst
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolReport {
    pub frequencies: Vec<usize>,
    /// `Q(P_ν h) / (λ_ν ‖P_ν‖² ∫|∇h|²)` per frequency.
    pub ratios: Vec<f64>,
    /// Relative spread of the top two ratios.
    pub plateau: f64,
    /// `Q(P_{2ν} h)/‖·‖² ÷ Q(P_ν h)/‖·‖²` for the lowest `ν` listed.
    pub doubling: f64,
    /// `Q(h)` for the constant base function.
    pub constant_form: f64,
}

/// High-frequency behaviour of the form on `P_ν(y) h` (the invariant
/// element).  `λ_ν = ν(ν+1)/2` is the round base eigenvalue.
pub fn pl1_symbol_check(
    model: &ModelFibration,
    omega: &RelativeMetric,
    base: &BaseMetric,
    eb: &PotentialBundle,
    frequencies: &[usize],
) -> SymbolReport {
    let (y, nx) = (model.y(), model.nx());
    let h = eb.invariant_potential();
    let wv = volume_weights(model, omega, base);
    let grad: f64 = {
        // ∫_X |∇_V h|² ω_X ∧ ω_B / area(B)
        let hs = model.d_s(h);
        let area = base.area(model);
        (0..model.len()).map(|n| wv[n] * 2.0 * hs[n] * hs[n] / omega.form.ss[n]).sum::<f64>() / area
    };
    let q = |nu: usize| -> (f64, f64) {
        let s: Vec<f64> = (0..model.len()).map(|n| legendre(nu, y[n / nx]).0 * h[n]).collect();
        let form = r_pairing(model, omega, &[s])[(0, 0)];
        let p: Vec<f64> = (0..model.ny()).map(|j| legendre(nu, y[j]).0).collect();
        let norm = crate::linearize::base_mean(model, base, &p.iter().map(|v| v * v).collect::<Vec<_>>())
            * base.area(model);
        (form, norm)
    };
    let ratios: Vec<f64> = frequencies
        .iter()
        .map(|&nu| {
            let (f, n) = q(nu);
            let lam = (nu * (nu + 1)) as f64 / 2.0;
            f / (lam * n * grad)
        })
        .collect();
    let m = ratios.len();
    let plateau = if m >= 2 { (ratios[m - 1] / ratios[m - 2] - 1.0).abs() } else { f64::NAN };
    let nu0 = frequencies.first().cloned().unwrap_or(1);
    let (f1, n1) = q(nu0);
    let (f2, n2) = q(2 * nu0);
    let doubling = (f2 / n2) / (f1 / n1);
    let constant_form = q(0).0;
    SymbolReport { frequencies: frequencies.to_vec(), ratios, plateau, doubling, constant_form }
}
