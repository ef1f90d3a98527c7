//! Adiabatic expansions of curvature quantities of `ω_k = k ω_B + ω_X`,
//! their fitted decay orders, and the linearized operators on the
//! function-space splitting.

pub mod assemble;
pub mod error;
pub mod exact;
pub mod fit;
pub mod linearize;
pub mod order_one;
pub mod terms;

pub use assemble::{assemble_pl1, pl1_symbol_check, quadratic_form_gap, AssembledOperator, BasisElement, SymbolReport};
pub use error::ExpansionError;
pub use exact::{exact_scalar, scalar_at, total_form, volume_weights};
pub use fit::{corrected_scalar_fit, decay_fit, fit_slope, ExpansionReport, LADDER};
pub use linearize::{
    base_lichnerowicz, e_sections, fd_linearization, l1_perturbation_invariance, linearization_probe,
    twisted_lichnerowicz_apply, PerturbationReport, ProbeDirection, ProbeReport,
};
pub use order_one::{solve_order_one, solve_vertical, OrderOne, OrderOneMode};
pub use terms::{expansion_terms, scalar_order_one, ExpansionTerms, Quantity, Term};
