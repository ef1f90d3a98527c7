//! Approximate extremal metrics on `X → B` by correction rounds in the
//! adiabatic parameter, a Newton polish at fixed `k`, and probes of the
//! linearized operator norms.

pub mod archive;
pub mod error;
pub mod newton;
pub mod round;
pub mod state;
pub mod steps;
pub mod tau;

pub use error::CorrectionError;
pub use round::{correct_to, correction_round, extract_coefficient, residual_decay, DecayReport, Extracted, RoundOptions, RoundReport, Step};
pub use state::{Background, CorrectionState, Mode};
pub use steps::{solve_base_step, solve_e_step, solve_r_step, BaseStep, EStep, RStep};
pub use newton::{
    extremal_residual, lipschitz_probe, newton_polish, norm_probe, scalar_jacobian, LipschitzReport, NormProbe,
    PolishOptions, PolishReport,
};
pub use archive::{load_state, save_state};
pub use tau::{fibre_flow_check, tau_lift, LiftedPotential};
