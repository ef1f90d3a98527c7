//! Optimal and extremal symplectic connections on model fibrations.

pub mod aut;
pub mod error;
pub mod r_op;
pub mod residual;
pub mod solve;

pub use aut::{aut_invariance_check, Automorphism, InvarianceReport};
pub use error::OscError;
pub use r_op::{r_apply, r_apply_mode, r_kernel_dimension, split_bundle_oracle};
pub use residual::{esc_residual, fano_lambda, fano_residual, osc_field, osc_residual, EscResidual, OscResidual};
pub use solve::{normalize_fibres, osc_solve, SolveOptions, SolveTarget, SolveTrace};
