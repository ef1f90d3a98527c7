use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("config line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unknown model kind `{0}`")]
    UnknownKind(String),
    #[error("unknown symmetry `{0}`")]
    UnknownSymmetry(String),
    #[error("d < 0 (got {0})")]
    NegativeDegree(i32),
    #[error("odd azimuthal mode count {0}")]
    OddAzimuth(usize),
    #[error("grid needs at least 8 nodes per dimension (got {0})")]
    TooFewNodes(usize),
    #[error("fibrewise positivity lost at node (base {base}, fibre {fibre}): eigenvalue {eigenvalue:e}")]
    Positivity { base: usize, fibre: usize, eigenvalue: f64 },
    #[error("total metric not positive at k = {k}; smallest admissible k ≈ {k_min}")]
    NotPositive { k: f64, k_min: f64 },
    #[error("field violates the {0} symmetry (max off-mode amplitude {1:e})")]
    Symmetry(&'static str, f64),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}
