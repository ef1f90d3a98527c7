//! The three linear solves of a correction round, one per summand of
//! `C∞(X) = C∞(B) ⊕ C∞_E ⊕ C∞_R`.

use nalgebra::{DMatrix, DVector};
use osclab_expansion::assemble::NULL_TOL;
use osclab_expansion::exact::volume_weights;
use osclab_expansion::linearize::{base_lichnerowicz, base_mean};
use osclab_expansion::{assemble_pl1, e_sections, solve_vertical, AssembledOperator};
use osclab_models::field::sup;
use osclab_relative::project_e;

use crate::error::CorrectionError;
use crate::state::{Background, Mode};

/// Relative size below which a kernel component counts as absent.
pub const KERNEL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct BaseStep {
    /// `f` with `D*D_B f = ψ_B − b`.
    pub f: Vec<f64>,
    /// `b = β₀ + β₁ m_B`, `m_B` the base moment map.
    pub beta: [f64; 2],
    pub residual: f64,
}

fn base_weights(bg: &Background) -> Vec<f64> {
    let (y, w) = (bg.model.y(), &bg.model.base.weights);
    (0..y.len()).map(|j| w[j] * bg.base.g[j] / (1.0 - y[j] * y[j])).collect()
}

/// Weighted least-squares fit of `v` by the columns `cols`.
fn weighted_fit(w: &[f64], cols: &[&[f64]], v: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let m = cols.len();
    let g = DMatrix::from_fn(m, m, |a, b| (0..w.len()).map(|n| w[n] * cols[a][n] * cols[b][n]).sum());
    let r = DVector::from_fn(m, |a, _| (0..w.len()).map(|n| w[n] * cols[a][n] * v[n]).sum());
    let c = g.lu().solve(&r).unwrap_or_else(|| DVector::zeros(m));
    let rest = (0..v.len()).map(|n| v[n] - (0..m).map(|a| c[a] * cols[a][n]).sum::<f64>()).collect();
    (c.iter().cloned().collect(), rest)
}

/// `D*D_B` as a matrix on base node values.
pub fn base_operator_matrix(bg: &Background) -> DMatrix<f64> {
    let ny = bg.model.ny();
    let mut m = DMatrix::zeros(ny, ny);
    for c in 0..ny {
        let mut e = vec![0.0; ny];
        e[c] = 1.0;
        let col = base_lichnerowicz(&bg.model, &bg.base, &e);
        for r in 0..ny {
            m[(r, c)] = col[r];
        }
    }
    m
}

/// Solves `D*D_B f = ψ_B − b` with `b` the projection of `ψ_B` onto the base
/// holomorphy potentials (extremal) or onto constants (cscK).
pub fn solve_base_step(bg: &Background, psi_b: &[f64], mode: Mode) -> Result<BaseStep, CorrectionError> {
    let w = base_weights(bg);
    let one = vec![1.0; psi_b.len()];
    let mb = bg.base_moment();
    let scale = sup(psi_b).max(1.0);
    let (c, rest) = weighted_fit(&w, &[&one, &mb], psi_b);
    let beta = match mode {
        Mode::Extremal => [c[0], c[1]],
        Mode::Csck => {
            let lin = c[1] * sup(&mb.iter().map(|v| v - base_mean(&bg.model, &bg.base, &mb)).collect::<Vec<_>>());
            if lin.abs() > KERNEL_TOL * scale {
                return Err(CorrectionError::NontrivialKernel(lin.abs()));
            }
            [base_mean(&bg.model, &bg.base, psi_b), 0.0]
        }
    };
    let rhs: Vec<f64> = match mode {
        Mode::Extremal => rest,
        Mode::Csck => psi_b.iter().map(|v| v - beta[0]).collect(),
    };
    let a = base_operator_matrix(bg);
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let f = svd
        .solve(&DVector::from_column_slice(&rhs), NULL_TOL * smax)
        .map_err(|_| CorrectionError::Singular(0.0))?;
    // Normalize away the kernel.
    let (_, f) = weighted_fit(&w, &[&one, &mb], f.as_slice());
    let af = &a * DVector::from_column_slice(&f);
    let residual = (0..rhs.len()).map(|j| (af[j] - rhs[j]).abs()).fold(0.0, f64::max);
    if residual > 1e-8 * scale {
        return Err(CorrectionError::NontrivialKernel(residual));
    }
    Ok(BaseStep { f, beta, residual })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EStep {
    /// `d ∈ C∞_E` with `p L₁ d = ψ_E − h`.
    pub d: Vec<f64>,
    /// Nullspace part `h`, a global holomorphy potential.
    pub h: Vec<f64>,
    /// `h = κ P_s` on `ω_X`.
    pub kappa: f64,
    /// Galerkin truncation residual of `ψ_E`.
    pub truncation: f64,
}

/// Invariant block of the assembled `p∘L₁` with `n` Legendre degrees.
pub fn invariant_pl1(bg: &Background, n: usize) -> Result<AssembledOperator, CorrectionError> {
    Ok(assemble_pl1(&bg.model, &bg.omega, &bg.base, &bg.eb, n, 0)?)
}

/// Galerkin solve of `p L₁ d = ψ_E − h` on the invariant sections
/// `P_l(y) h_E`, `l < n`; `h` is the nullspace component of `ψ_E`.
pub fn solve_e_step(bg: &Background, op: &AssembledOperator, psi_e: &[f64], mode: Mode) -> Result<EStep, CorrectionError> {
    let idx = op.invariant_indices();
    let n = idx.len();
    let m = &bg.model;
    let secs = e_sections(m, &bg.eb, n - 1);
    let mass = DMatrix::from_fn(n, n, |a, b| op.mass[(idx[a], idx[b])]);
    let mat = DMatrix::from_fn(n, n, |a, b| 0.5 * (op.matrix[(idx[a], idx[b])] + op.matrix[(idx[b], idx[a])]));
    let wv = volume_weights(m, &bg.omega, &bg.base);
    let rhs = DVector::from_fn(n, |a, _| (0..m.len()).map(|q| wv[q] * psi_e[q] * secs[a][q]).sum());
    let chol = mass.clone().cholesky().ok_or(CorrectionError::Singular(0.0))?;
    let gamma = chol.solve(&rhs);
    let field = |c: &DVector<f64>| -> Vec<f64> {
        (0..m.len()).map(|q| (0..n).map(|a| c[a] * secs[a][q]).sum()).collect()
    };
    let back = field(&gamma);
    let truncation = (0..m.len()).map(|q| (back[q] - psi_e[q]).abs()).fold(0.0, f64::max);
    let scale = sup(psi_e).max(1.0);
    if truncation > 1e-8 * scale {
        return Err(CorrectionError::NotRepresentable(truncation));
    }
    let l = chol.l();
    let linv = l.clone().try_inverse().ok_or(CorrectionError::Singular(0.0))?;
    let reduced = &linv * &mat * linv.transpose();
    let eig = reduced.symmetric_eigen();
    let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max).max(1e-300);
    let z = l.transpose() * &gamma;
    let mut zk = DVector::zeros(n);
    let mut dz = DVector::zeros(n);
    for i in 0..n {
        let u = eig.eigenvectors.column(i);
        let c = u.dot(&z);
        let lam = eig.eigenvalues[i];
        if lam.abs().sqrt() < NULL_TOL * top.sqrt() {
            zk += c * u;
        } else {
            dz += (c / lam) * u;
        }
    }
    let d = field(&(linv.transpose() * dz));
    let h = field(&(linv.transpose() * zk));
    let ps = bg.omega.fibre_moment(m);
    let (kc, rest) = weighted_fit(&wv, &[&ps], &h);
    if sup(&rest) > KERNEL_TOL * scale {
        return Err(CorrectionError::NontrivialKernel(sup(&rest)));
    }
    let kappa = kc[0];
    if mode == Mode::Csck && sup(&h) > KERNEL_TOL * scale {
        return Err(CorrectionError::NontrivialKernel(sup(&h)));
    }
    Ok(EStep { d, h, kappa, truncation })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RStep {
    pub l: Vec<f64>,
    pub residual: f64,
}

/// `D_V*D_V l = ψ_R` fibrewise, for `ψ_R ∈ C∞_R`.
pub fn solve_r_step(bg: &Background, psi_r: &[f64]) -> Result<RStep, CorrectionError> {
    let m = &bg.model;
    let scale = sup(psi_r).max(1.0);
    let mean = bg.omega.fibre_mean(m, psi_r);
    let pe = project_e(m, &bg.omega, &bg.eb, psi_r)?;
    let off = sup(&mean).max(sup(&pe));
    if off > 1e-8 * scale {
        return Err(CorrectionError::NotInR(off));
    }
    let (l, residual) = solve_vertical(m, &bg.omega, &bg.eb, psi_r)?;
    Ok(RStep { l, residual })
}
