use osclab_models::ModelError;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RelativeError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("Gram matrix ill-conditioned at base node {node}: condition {condition:e}")]
    IllConditioned { node: usize, condition: f64 },
    #[error("rank of ker D*D jumps across the base: {first} at node 0, {found} at node {node}")]
    RankJump { first: usize, found: usize, node: usize },
    #[error("fibre integrand has degree below the fibre dimension")]
    DegreeTooLow,
    #[error("chart gluing mismatch {0:e}")]
    ChartMismatch(f64),
    #[error("fibre restrictions differ (gap {0:e})")]
    NotApplicable(f64),
    #[error("fibres have no continuous automorphisms: E has rank 0")]
    RigidFibre,
}
