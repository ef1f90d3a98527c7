//! One correction round: extract the next error coefficient along a
//! `k`-ladder, then remove its base, `E` and `R` parts in turn.

use nalgebra::DMatrix;
use osclab_expansion::fit_slope;
use osclab_expansion::linearize::base_mean;
use osclab_models::field::sup;
use osclab_relative::decompose;

use crate::error::CorrectionError;
use crate::state::{Background, CorrectionState, Mode};
use crate::steps::{invariant_pl1, solve_base_step, solve_e_step, solve_r_step};

/// Decay ladder.
pub const LADDER: [f64; 4] = [20.0, 40.0, 80.0, 160.0];

/// Ladder for coefficient extraction, fitted by a polynomial in `k⁻¹`.
pub const EXTRACTION_LADDER: [f64; 8] = [16.0, 21.0, 28.0, 37.0, 48.0, 64.0, 90.0, 128.0];

/// Residual sup norms below this are extraction roundoff and count as zero.
pub const RESIDUAL_FLOOR: f64 = 1e-9;

/// Highest order a round may reach.
pub const MAX_ORDER: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    Base,
    E,
    R,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundOptions {
    pub ks: Vec<f64>,
    pub extraction: Vec<f64>,
    /// Terms of the `k⁻¹` polynomial used in extraction.
    pub terms: usize,
    /// Legendre degrees in the `E` Galerkin basis; `0` means the base node count.
    pub basis: usize,
    /// Anything but `[Base, E, R]` is for demonstration only.
    pub steps: [Step; 3],
    /// Skip the entry decay check.
    pub skip_entry_check: bool,
}

impl Default for RoundOptions {
    fn default() -> Self {
        RoundOptions {
            ks: LADDER.to_vec(),
            extraction: EXTRACTION_LADDER.to_vec(),
            terms: 5,
            basis: 0,
            steps: [Step::Base, Step::E, Step::R],
            skip_entry_check: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    pub ks: Vec<f64>,
    pub norms: Vec<f64>,
    pub slope: f64,
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundReport {
    pub order: usize,
    pub entry: DecayReport,
    pub exit: DecayReport,
    /// Sup norms of the base, `E` and `R` parts of the extracted coefficient.
    pub source: [f64; 3],
    /// Sup norms of `f`, `d`, `l`.
    pub fields: [f64; 3],
    pub beta: [f64; 2],
    pub kappa: f64,
    pub drift: f64,
}

/// Sup norm of `S(ω_{k,r}) − η_{k,r}` along `ks` and its log-log slope.
pub fn residual_decay(bg: &Background, state: &CorrectionState, ks: &[f64]) -> Result<DecayReport, CorrectionError> {
    let norms = ks.iter().map(|&k| Ok(sup(&state.residual(bg, k)?))).collect::<Result<Vec<f64>, CorrectionError>>()?;
    let exact = norms.iter().all(|v| *v <= RESIDUAL_FLOOR);
    let slope = if exact {
        f64::NEG_INFINITY
    } else {
        let ny: Vec<f64> = norms.iter().map(|v| v.max(1e-300)).collect();
        fit_slope(ks, &ny).0
    };
    Ok(DecayReport { ks: ks.to_vec(), norms, slope, exact })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extracted {
    pub coefficient: Vec<f64>,
    /// Standard error of the coefficient from the fit residuals, worst node.
    pub noise: f64,
}

/// Components within this multiple of the extraction noise are unresolved.
pub const NOISE_FACTOR: f64 = 10.0;

/// Coefficient of `k^{−order}` in `S(ω_{k,r}) − η_{k,r}`, by least squares in
/// `k⁻¹` over the ladder.
pub fn extract_coefficient(
    bg: &Background,
    state: &CorrectionState,
    order: usize,
    ks: &[f64],
    terms: usize,
) -> Result<Extracted, CorrectionError> {
    let terms = terms.min(ks.len()).max(1);
    let v = DMatrix::from_fn(ks.len(), terms, |i, j| ks[i].powi(-(j as i32)));
    let pinv = v.clone().pseudo_inverse(1e-14).map_err(|_| CorrectionError::Singular(0.0))?;
    let n = bg.model.len();
    let mut data = DMatrix::zeros(ks.len(), n);
    for (i, &k) in ks.iter().enumerate() {
        let e = state.residual(bg, k)?;
        let c = k.powi(order as i32);
        for q in 0..n {
            data[(i, q)] = c * e[q];
        }
    }
    let coeffs = &pinv * &data;
    let resid = &data - &v * &coeffs;
    let dof = (ks.len() - terms).max(1) as f64;
    let gain = pinv.row(0).norm();
    let noise = (0..n).map(|q| (resid.column(q).norm_squared() / dof).sqrt() * gain).fold(0.0, f64::max);
    Ok(Extracted { coefficient: coeffs.row(0).iter().cloned().collect(), noise })
}

/// Raises the order of `state` by one.
pub fn correction_round(
    bg: &Background,
    state: &CorrectionState,
    opts: &RoundOptions,
) -> Result<(CorrectionState, RoundReport), CorrectionError> {
    let r = state.order;
    let next = r + 1;
    if next > MAX_ORDER {
        return Err(CorrectionError::OrderTooHigh(next));
    }
    let entry = residual_decay(bg, state, &opts.ks)?;
    if !opts.skip_entry_check && !entry.exact && entry.slope > -(next as f64) + 0.2 {
        return Err(CorrectionError::DecayFit { order: r, slope: entry.slope });
    }
    let m = &bg.model;
    let mut st = state.clone();
    st.order = next;
    st.pad(bg, next);
    let n = if opts.basis == 0 { m.ny() } else { opts.basis };
    let mut source = [0.0; 3];
    let mut beta = [0.0; 2];
    let mut kappa = 0.0;
    let mut first = true;
    for step in opts.steps {
        let ex = extract_coefficient(bg, &st, next, &opts.extraction, opts.terms)?;
        let parts = decompose(m, &bg.omega, &bg.eb, &ex.coefficient)?;
        if first {
            source = [sup(&parts.base), sup(&parts.e), sup(&parts.r)];
            first = false;
        }
        let part = match step {
            Step::Base => sup(&parts.base),
            Step::E => sup(&parts.e),
            Step::R => sup(&parts.r),
        };
        if part <= NOISE_FACTOR * ex.noise {
            continue;
        }
        match step {
            Step::Base => {
                let b = solve_base_step(bg, &parts.base, st.mode)?;
                beta = b.beta;
                st.base_fields[r] = b.f;
                match st.mode {
                    Mode::Extremal => {
                        // β₁ m_B = β₁ k⁻¹ P_t up to terms of higher order.
                        st.add_constant(next, beta[0]);
                        st.add_base_coeff(next + 1, beta[1]);
                    }
                    Mode::Csck => st.add_constant(next, beta[0]),
                }
            }
            Step::E => {
                let op = invariant_pl1(bg, n)?;
                let s = solve_e_step(bg, &op, &parts.e, st.mode)?;
                kappa = s.kappa;
                st.e_fields[r] = s.d;
                if st.mode == Mode::Extremal {
                    st.add_fibre_coeff(next, kappa);
                }
            }
            Step::R => {
                let s = solve_r_step(bg, &parts.r)?;
                st.r_fields[r] = s.l;
            }
        }
    }
    let e = extract_coefficient(bg, &st, next, &opts.extraction, opts.terms)?.coefficient;
    let drift = base_mean(m, &bg.base, &bg.omega.fibre_mean(m, &e));
    st.drift.push(drift);
    let exit = residual_decay(bg, &st, &opts.ks)?;
    let fields = [sup(&st.base_fields[r]), sup(&st.e_fields[r]), sup(&st.r_fields[r])];
    Ok((st, RoundReport { order: next, entry, exit, source, fields, beta, kappa, drift }))
}

/// Rounds from the current order up to `target`.
pub fn correct_to(
    bg: &Background,
    state: &CorrectionState,
    target: usize,
    opts: &RoundOptions,
) -> Result<(CorrectionState, Vec<RoundReport>), CorrectionError> {
    let mut st = state.clone();
    let mut reports = vec![];
    while st.order < target {
        let (s, rep) = correction_round(bg, &st, opts)?;
        st = s;
        reports.push(rep);
    }
    Ok((st, reports))
}
