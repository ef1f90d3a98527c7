use osclab_expansion::ExpansionError;
use osclab_models::ModelError;
use osclab_relative::RelativeError;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CorrectionError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Relative(#[from] RelativeError),
    #[error(transparent)]
    Expansion(#[from] ExpansionError),
    #[error("source has a component {0:e} along non-constant holomorphy potentials; use extremal mode")]
    NontrivialKernel(f64),
    #[error("E source not representable in the section basis (truncation residual {0:e}); increase N")]
    NotRepresentable(f64),
    #[error("source is not in C∞_R (E or base part {0:e})")]
    NotInR(f64),
    #[error("previous order not achieved: residual slope {slope:.3} at order {order}")]
    DecayFit { order: usize, slope: f64 },
    #[error("order {0} exceeds the supported maximum of 3")]
    OrderTooHigh(usize),
    #[error("potential is not in the catalogue Lie algebra (residual {0:e})")]
    NotInLieAlgebra(f64),
    #[error("Jacobian singular beyond the potential directions (smallest singular value {0:e})")]
    Singular(f64),
    #[error("line search failed at step {step} with residual {residual:e}")]
    LineSearch { step: usize, residual: f64 },
    #[error("archive: {0}")]
    Archive(String),
}
