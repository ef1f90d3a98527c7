//! The acceptance criteria as check groups on the catalogue models.

use osclab_correction::Mode;
use osclab_models::{build_model, ModelConfig, ModelFibration};

use crate::checks::{self, label, Outcome};
use crate::config::{RunConfig, Slopes, Tolerances};
use crate::error::{CliError, Context};

pub const CRITERIA: usize = 10;

pub fn title(n: usize) -> &'static str {
    match n {
        1 => "operator identities",
        2 => "Fano eigenvalue",
        3 => "Hermite-Einstein equivalence",
        4 => "expansion orders",
        5 => "corrected scalar curvature",
        6 => "pL1 properties",
        7 => "linearization identities",
        8 => "correction rounds",
        9 => "Newton polish and norms",
        10 => "invariance and reality",
        _ => "unknown",
    }
}

/// Parameters shared by every criterion.
#[derive(Debug, Clone)]
pub struct SuiteParams {
    pub tol: Tolerances,
    pub slopes: Slopes,
    pub ladder: Vec<f64>,
    pub probe_ladder: Vec<f64>,
    pub basis_degree: usize,
    pub basis_modes: usize,
    pub k: f64,
    pub max_newton_steps: usize,
    pub seed: u64,
}

impl SuiteParams {
    pub fn from_config(cfg: &RunConfig, seed: u64) -> Self {
        SuiteParams {
            tol: cfg.tolerances.clone(),
            slopes: cfg.slopes.clone(),
            ladder: cfg.ladder.clone(),
            probe_ladder: cfg.probe_ladder.clone(),
            basis_degree: cfg.basis_degree,
            basis_modes: cfg.basis_modes,
            k: cfg.k,
            max_newton_steps: cfg.max_newton_steps,
            seed,
        }
    }
}

impl Default for SuiteParams {
    fn default() -> Self {
        Self::from_config(&RunConfig::default(), 0)
    }
}

fn product(n: usize) -> Result<ModelFibration, CliError> {
    build_model(&ModelConfig::product(n)).context("product model")
}

fn f1(n: usize) -> Result<ModelFibration, CliError> {
    build_model(&ModelConfig::proj_bundle(1, n)).context("F1 model")
}

/// Runs each group on both catalogue models, naming checks by model.
fn both(n: usize, run: impl Fn(&ModelFibration) -> Result<Outcome, CliError>) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    for m in [product(n)?, f1(n)?] {
        out.merge(run(&m)?.prefixed(&label(&m)));
    }
    Ok(out)
}

/// Criterion `n` (1-based).  Check names carry the model.
pub fn criterion(n: usize, p: &SuiteParams) -> Result<Outcome, CliError> {
    let (tol, slopes) = (&p.tol, &p.slopes);
    match n {
        1 => both(24, |m| checks::operator_identities(m, tol)),
        2 => both(24, |m| checks::fano_eigenvalue(m, tol)),
        3 => {
            let m = f1(24)?;
            Ok(checks::he_equivalence(&m, &[0, 1], p.seed, tol)?.prefixed("f1"))
        }
        4 => both(24, |m| checks::expansion_orders(m, &p.ladder, slopes)),
        5 => Ok(checks::corrected_scalar(&f1(24)?, &p.ladder, slopes)?.prefixed("f1")),
        6 => both(20, |m| checks::pl1_properties(m, p.basis_degree, p.basis_modes, p.seed, tol)),
        7 => both(20, |m| checks::linearization_identities(m, &p.probe_ladder, slopes)),
        8 => {
            let mut out = Outcome::default();
            for (m, mode) in [(f1(20)?, Mode::Extremal), (product(20)?, Mode::Csck)] {
                let bg = checks::background(&m)?;
                let (o, _) = checks::correction(&bg, mode, &p.ladder, 2, slopes)?;
                out.merge(o.prefixed(&label(&m)));
            }
            Ok(out)
        }
        9 => {
            let bg = checks::background(&f1(20)?)?;
            let (_, state) = checks::correction(&bg, Mode::Extremal, &p.ladder, 2, slopes)?;
            let mut out = checks::polish(&bg, &state, p.k, p.max_newton_steps, tol)?;
            out.merge(checks::norms(&bg, &state, &p.ladder, slopes)?);
            Ok(out.prefixed("f1"))
        }
        10 => {
            let mut out = both(24, |m| checks::invariance(m, tol))?;
            out.merge(both(20, |m| checks::reality(m, &p.probe_ladder, tol))?);
            Ok(out)
        }
        _ => Err(CliError::Config(format!("no criterion {n}"))),
    }
}
