//! The bundle `E → B` of fibrewise holomorphy potentials and the projection
//! `p` onto it.
//!
//! For `P¹` fibres `E` has rank three: one potential in the invariant circle
//! mode `b = 0` and one in each of the modes `b = ±1`.  Basis elements are
//! stored as reduced values in their mode (see [`crate::fibre`]); distinct
//! modes are `L²`-orthogonal, so the Gram matrix is block diagonal.

use nalgebra::{DMatrix, DVector};
use osclab_models::metric::shifted_x;
use osclab_models::{ModelFibration, RelativeMetric};

use crate::error::RelativeError;
use crate::fibre::{apply, fibre_operators, FibreOperators};

/// Kind of fibre, for bundles built from synthetic data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FibreKind {
    Sphere,
    /// Flag for a fibre without holomorphic vector fields (higher genus).
    Rigid,
}

#[derive(Debug, Clone)]
pub struct PotentialBundle {
    pub rank: usize,
    /// Circle mode of each basis element.
    pub modes: Vec<i32>,
    /// Reduced values of each basis element on the full grid.
    pub basis: Vec<Vec<f64>>,
    /// `G_ij(b)` per base node.
    pub gram: Vec<DMatrix<f64>>,
    /// Worst Gram condition number over the base.
    pub condition: f64,
    /// Largest fibrewise `‖D*D h_i‖ / ‖h_i‖`.
    pub residual: f64,
    /// Whether the closed-form round basis was used.
    pub analytic: bool,
}

const MODES: [i32; 3] = [0, 1, -1];

pub fn build_potential_bundle(model: &ModelFibration, omega: &RelativeMetric) -> Result<PotentialBundle, RelativeError> {
    build_potential_bundle_for(model, omega, FibreKind::Sphere)
}

pub fn build_potential_bundle_for(
    model: &ModelFibration,
    omega: &RelativeMetric,
    kind: FibreKind,
) -> Result<PotentialBundle, RelativeError> {
    if kind == FibreKind::Rigid {
        return Err(RelativeError::RigidFibre);
    }
    let (nx, ny) = (model.nx(), model.ny());
    let analytic = omega.is_invariant_round();
    let mut basis = vec![vec![0.0; model.len()]; MODES.len()];
    let mut first_rank = None;
    for j in 0..ny {
        let mut rank = 0;
        for (m, &b) in MODES.iter().enumerate() {
            let ops = fibre_operators(model, omega, j, b);
            let kernel = numeric_kernel(model, &ops);
            rank += kernel.len();
            let reference = round_potential(model, omega.shift[j], b);
            let h = if analytic || kernel.len() != 1 {
                reference.clone()
            } else {
                align(model, &ops, kernel[0].clone(), &reference)
            };
            basis[m][j * nx..(j + 1) * nx].copy_from_slice(&h);
        }
        match first_rank {
            None => first_rank = Some(rank),
            Some(r) if r != rank => return Err(RelativeError::RankJump { first: r, found: rank, node: j }),
            _ => {}
        }
    }
    let rank = first_rank.unwrap_or(0);
    if rank != MODES.len() {
        return Err(RelativeError::RankJump { first: MODES.len(), found: rank, node: 0 });
    }
    let mut gram = Vec::with_capacity(ny);
    let mut condition = 1.0f64;
    let mut residual = 0.0f64;
    for j in 0..ny {
        let ops: Vec<FibreOperators> = MODES.iter().map(|&b| fibre_operators(model, omega, j, b)).collect();
        let g = DMatrix::from_fn(3, 3, |r, c| {
            if MODES[r] != MODES[c] {
                0.0
            } else {
                ops[r].dot(model, &basis[r][j * nx..(j + 1) * nx], &basis[c][j * nx..(j + 1) * nx])
            }
        });
        let ev = g.clone().symmetric_eigenvalues();
        condition = condition.max(ev.max() / ev.min());
        for (m, op) in ops.iter().enumerate() {
            let h = &basis[m][j * nx..(j + 1) * nx];
            let r = apply(&op.lichnerowicz, h);
            residual = residual.max((op.dot(model, &r, &r) / op.dot(model, h, h)).sqrt());
        }
        gram.push(g);
    }
    Ok(PotentialBundle { rank, modes: MODES.to_vec(), basis, gram, condition, residual, analytic })
}

/// Closed-form potentials of the round metric with shift `a`: `x_a` for
/// `b = 0`, and `2e^{−a/2} / ((1+x)e^{−a} + 1 − x)` (reduced) for `b = ±1`.
fn round_potential(model: &ModelFibration, a: f64, b: i32) -> Vec<f64> {
    let e = (-a).exp();
    model
        .x()
        .iter()
        .map(|&x| if b == 0 { shifted_x(x, a) } else { 2.0 * (-a / 2.0).exp() / ((1.0 + x) * e + 1.0 - x) })
        .collect()
}

/// Kernel of the discretized `D*D` (mean-zero part for `b = 0`), singular
/// values below `1e-6` of the largest.
fn numeric_kernel(model: &ModelFibration, ops: &FibreOperators) -> Vec<Vec<f64>> {
    let n = model.nx();
    let a = &ops.lichnerowicz;
    let scale = a.amax();
    let rows = if ops.b == 0 { n + 1 } else { n };
    let w = ops.l2_weights(model);
    let m = DMatrix::from_fn(rows, n, |i, k| if i < n { a[(i, k)] } else { scale * w[k] });
    let svd = m.svd(false, true);
    let vt = svd.v_t.expect("requested");
    let smax = svd.singular_values.max();
    (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] < 1e-6 * smax)
        .map(|i| vt.row(i).iter().cloned().collect())
        .collect()
}

/// Scales a kernel vector to the norm of the round potential and fixes its
/// sign by overlap, so that the basis varies smoothly with the base point.
fn align(model: &ModelFibration, ops: &FibreOperators, h: Vec<f64>, reference: &[f64]) -> Vec<f64> {
    let s = ops.dot(model, &h, reference).signum();
    let scale = (ops.dot(model, reference, reference) / ops.dot(model, &h, &h)).sqrt();
    h.iter().map(|v| v * s * scale).collect()
}

impl PotentialBundle {
    /// Basis element `i` as an invariant function; only defined for the
    /// `b = 0` element.
    pub fn invariant_potential(&self) -> &[f64] {
        &self.basis[0]
    }

    /// Coefficients `c = G⁻¹⟨φ, h⟩` of the projection of an invariant
    /// function, per base node.
    pub fn coefficients(
        &self,
        model: &ModelFibration,
        omega: &RelativeMetric,
        phi: &[f64],
    ) -> Result<Vec<DVector<f64>>, RelativeError> {
        let nx = model.nx();
        let mut out = Vec::with_capacity(model.ny());
        for j in 0..model.ny() {
            let g = &self.gram[j];
            let ev = g.clone().symmetric_eigenvalues();
            let condition = ev.max() / ev.min();
            if !(condition <= 1e8) {
                return Err(RelativeError::IllConditioned { node: j, condition });
            }
            let row = &phi[j * nx..(j + 1) * nx];
            // Invariant functions only pair with the b = 0 mode.
            let rhs = DVector::from_fn(self.rank, |i, _| {
                if self.modes[i] == 0 {
                    omega.fibre_dot(model, j, row, &self.basis[i][j * nx..(j + 1) * nx])
                } else {
                    0.0
                }
            });
            let c = g.clone().cholesky().map(|ch| ch.solve(&rhs)).ok_or(RelativeError::IllConditioned {
                node: j,
                condition,
            })?;
            out.push(c);
        }
        Ok(out)
    }
}

/// `p(φ) = Σ c_i(b) h_i` for an invariant `φ`.
pub fn project_e(
    model: &ModelFibration,
    omega: &RelativeMetric,
    eb: &PotentialBundle,
    phi: &[f64],
) -> Result<Vec<f64>, RelativeError> {
    let c = eb.coefficients(model, omega, phi)?;
    let nx = model.nx();
    let h = eb.invariant_potential();
    Ok((0..model.len()).map(|n| c[n / nx][0] * h[n]).collect())
}

/// `φ = π*φ_B + φ_E + φ_R`.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub base: Vec<f64>,
    pub e: Vec<f64>,
    pub r: Vec<f64>,
}

impl Decomposition {
    pub fn reconstruct(&self, model: &ModelFibration) -> Vec<f64> {
        let b = model.pullback(&self.base);
        (0..b.len()).map(|n| b[n] + self.e[n] + self.r[n]).collect()
    }
}

pub fn decompose(
    model: &ModelFibration,
    omega: &RelativeMetric,
    eb: &PotentialBundle,
    phi: &[f64],
) -> Result<Decomposition, RelativeError> {
    let base = omega.fibre_mean(model, phi);
    let pb = model.pullback(&base);
    let rest: Vec<f64> = phi.iter().zip(&pb).map(|(a, b)| a - b).collect();
    let e = project_e(model, omega, eb, &rest)?;
    let r = rest.iter().zip(&e).map(|(a, b)| a - b).collect();
    Ok(Decomposition { base, e, r })
}
