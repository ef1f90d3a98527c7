//! Relative geometry of a fibration `X → B` with a relatively Kähler form:
//! fibre integrals, the splitting `C∞(X) = C∞(B) ⊕ C∞_E ⊕ C∞_R`, the bundle of
//! fibrewise holomorphy potentials, curvature of the fibration and the
//! vertical operators.

pub mod bundle;
pub mod curvature;
pub mod error;
pub mod fibre;

pub use bundle::{
    build_potential_bundle, build_potential_bundle_for, decompose, project_e, Decomposition, FibreKind,
    PotentialBundle,
};
pub use error::RelativeError;


pub use curvature::{
    bracket_hamiltonian, contract, curvature_data, fibre_integral, fibrewise_lichnerowicz,
    forms_agree_on_fibres_check, horizontal_part, relative_ricci, symplectic_curvature, vertical_laplacian,
    AgreeReport, Contraction, CurvatureData, Integrand, SymplecticCurvature,
};
