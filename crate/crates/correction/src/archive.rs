//! Text archive of a correction state with the geometry it was built on,
//! so that rounds can resume.

use osclab_models::{build_model, BaseMetric, ModelConfig, RelativeMetric};
use serde::{Deserialize, Serialize};

use crate::error::CorrectionError;
use crate::state::{Background, CorrectionState};

pub const FORMAT: &str = "osclab-correction-state";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Archive {
    format: String,
    version: u32,
    model: String,
    scale: f64,
    shift: Vec<f64>,
    potential: Vec<f64>,
    nu: Vec<f64>,
    base_potential: Vec<f64>,
    state: CorrectionState,
}

pub fn save_state(bg: &Background, state: &CorrectionState) -> String {
    let a = Archive {
        format: FORMAT.into(),
        version: VERSION,
        model: bg.model.config().to_text(),
        scale: bg.omega.scale,
        shift: bg.omega.shift.clone(),
        potential: bg.omega.potential.clone(),
        nu: bg.omega.nu.clone(),
        base_potential: bg.base.potential.clone(),
        state: state.clone(),
    };
    serde_json::to_string_pretty(&a).expect("archive serializes")
}

pub fn load_state(text: &str) -> Result<(Background, CorrectionState), CorrectionError> {
    let a: Archive = serde_json::from_str(text).map_err(|e| CorrectionError::Archive(e.to_string()))?;
    if a.format != FORMAT || a.version != VERSION {
        return Err(CorrectionError::Archive(format!("unsupported archive {} v{}", a.format, a.version)));
    }
    let model = build_model(&ModelConfig::parse(&a.model)?)?;
    let (n, ny) = (model.len(), model.ny());
    let st = &a.state;
    let sizes_ok = a.shift.len() == ny
        && a.potential.len() == n
        && a.nu.len() == ny
        && a.base_potential.len() == ny
        && st.base_fields.len() == st.order
        && st.e_fields.len() == st.order
        && st.r_fields.len() == st.order
        && st.base_fields.iter().all(|f| f.len() == ny)
        && st.e_fields.iter().chain(&st.r_fields).all(|f| f.len() == n);
    if !sizes_ok {
        return Err(CorrectionError::Archive("field sizes do not match the grid".into()));
    }
    let omega = RelativeMetric::from_parts_scaled(&model, a.scale, a.shift, a.potential, a.nu)?;
    let base = BaseMetric::with_potential(&model, a.base_potential)?;
    let bg = Background::new(&model, &omega, &base)?;
    Ok((bg, a.state))
}
