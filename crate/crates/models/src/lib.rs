//! Desk-scale model fibrations `X → B` with P¹ fibres over P¹, their
//! collocation grids, field types and the Kähler curvature kernel shared by
//! the rest of the workspace.

pub mod error;
pub mod export;
pub mod field;
pub mod kahler;
pub mod metric;
pub mod model;
pub mod ops;
pub mod spectral;

pub use error::ModelError;
pub use field::{ModeField, ScalarField, TwoFormField, Weight};
pub use metric::{
    perturb_metric, reference_base_metric, reference_relative_metric, total_metric, BaseMetric, RelativeMetric,
    TotalMetric,
};
pub use model::{build_model, ModelConfig, ModelFibration, ModelKind, SphereGrid, Symmetry};
