use osclab_models::ModelError;
use osclab_relative::RelativeError;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OscError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Relative(#[from] RelativeError),
    #[error("model is not Fano-normalized: λω_X − ρ has fibre gap {0:e}")]
    NotFano(f64),
    #[error("input is not a fibrewise holomorphy potential: ‖D*D f‖ = {0:e}")]
    NotInE(f64),
    #[error("solver stagnated after {iterations} iterations at residual {residual:e}")]
    Stagnation { iterations: usize, residual: f64 },
    #[error("automorphism does not cover the identity of the base")]
    NotRelative,
}
