use osclab_models::ModelError;
use osclab_relative::RelativeError;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExpansionError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Relative(#[from] RelativeError),
    #[error("k ladder: {0}")]
    Ladder(String),
    #[error("order-one hypotheses violated: E part {e:e}, non-constant base part {b:e}")]
    Hypotheses { e: f64, b: f64 },
    #[error("fibrewise CG stagnated at base node {node}: residual {residual:e}")]
    Stagnation { node: usize, residual: f64 },
    #[error("mass matrix ill-conditioned: {0:e}")]
    MassConditioning(f64),
    #[error("base basis too small: N = {0} (need N >= 4)")]
    BasisTooSmall(usize),
    #[error("twist is not a real base (1,1)-form (off-base part {0:e})")]
    NotBaseForm(f64),
    #[error("finite-difference step {0:e} outside the stability window")]
    FdStep(f64),
}
