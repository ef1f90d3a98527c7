//! Run configuration: a TOML file naming a model file plus command parameters.

use std::path::{Path, PathBuf};

use osclab_correction::Mode;
use osclab_models::{build_model, ModelConfig, ModelFibration, ModelKind};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Check tolerances.  All must be positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub closedness: f64,
    pub volume_spread: f64,
    pub chart_gap: f64,
    pub coupling: f64,
    pub direct_image: f64,
    pub fibre_ricci: f64,
    pub orthogonality: f64,
    pub fano: f64,
    pub oracle: f64,
    pub equivalence: f64,
    pub esc: f64,
    pub osc_complement: f64,
    pub he: f64,
    pub degree: f64,
    pub osc_solve: f64,
    pub symmetry: f64,
    pub psd: f64,
    pub quadratic_form: f64,
    pub newton: f64,
    pub invariance: f64,
    pub reality: f64,
    pub lipschitz: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            closedness: 1e-10,
            volume_spread: 1e-12,
            chart_gap: 1e-8,
            coupling: 1e-12,
            direct_image: 1e-10,
            fibre_ricci: 1e-8,
            orthogonality: 1e-10,
            fano: 1e-8,
            oracle: 1e-12,
            equivalence: 1e-6,
            esc: 1e-7,
            osc_complement: 1e-6,
            he: 1e-10,
            degree: 1e-8,
            osc_solve: 1e-7,
            symmetry: 1e-10,
            psd: 1e-10,
            quadratic_form: 1e-8,
            newton: 1e-9,
            invariance: 1e-8,
            reality: 1e-8,
            lipschitz: 1e4,
        }
    }
}

impl Tolerances {
    fn entries(&self) -> [(&'static str, f64); 22] {
        [
            ("closedness", self.closedness),
            ("volume_spread", self.volume_spread),
            ("chart_gap", self.chart_gap),
            ("coupling", self.coupling),
            ("direct_image", self.direct_image),
            ("fibre_ricci", self.fibre_ricci),
            ("orthogonality", self.orthogonality),
            ("fano", self.fano),
            ("oracle", self.oracle),
            ("equivalence", self.equivalence),
            ("esc", self.esc),
            ("osc_complement", self.osc_complement),
            ("he", self.he),
            ("degree", self.degree),
            ("osc_solve", self.osc_solve),
            ("symmetry", self.symmetry),
            ("psd", self.psd),
            ("quadratic_form", self.quadratic_form),
            ("newton", self.newton),
            ("invariance", self.invariance),
            ("reality", self.reality),
            ("lipschitz", self.lipschitz),
        ]
    }
}

/// Slope bounds for the fitted decay and growth rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Slopes {
    /// Expansion residuals after subtracting through order one.
    pub expansion: f64,
    /// Corrected scalar curvature, modulo the order-one potential.
    pub corrected: f64,
    /// Finite-difference linearization identities.
    pub linearization: f64,
    /// Residual decay after correction round `r`, indexed from `r = 1`.
    pub rounds: Vec<f64>,
    /// Growth of the inverse linearization norm.
    pub inverse_norm: f64,
}

impl Default for Slopes {
    fn default() -> Self {
        Slopes { expansion: -1.85, corrected: -1.85, linearization: -0.85, rounds: vec![-1.8, -2.8, -3.8], inverse_norm: 3.2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OscTarget {
    Osc,
    Esc,
}

/// Everything a command reads.  Paths are resolved against the directory
/// of the configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Model description in the `key = value` format.
    pub model: PathBuf,
    /// Expansion and correction ladder.
    pub ladder: Vec<f64>,
    /// Ladder for the finite-difference linearization probes.
    pub probe_ladder: Vec<f64>,
    pub orders: usize,
    /// Fixed `k` for `polish` and the Lipschitz probe.
    pub k: f64,
    /// Correction mode; by default extremal on Hirzebruch surfaces and cscK
    /// on the product.
    pub mode: Option<Mode>,
    /// Bundle degrees for `he-solve` and `equivalence`; default `[0, d]`.
    pub degrees: Option<Vec<i32>>,
    pub basis_degree: usize,
    pub basis_modes: usize,
    /// Amplitude of the perturbation used as a starting metric.
    pub perturbation: f64,
    pub target: OscTarget,
    /// Archive to resume from in `polish`.
    pub state: Option<PathBuf>,
    pub max_newton_steps: usize,
    pub lipschitz_pairs: usize,
    pub lipschitz_radius: f64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub tolerances: Tolerances,
    pub slopes: Slopes,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: PathBuf::new(),
            ladder: vec![20.0, 40.0, 80.0, 160.0],
            probe_ladder: vec![40.0, 80.0, 160.0],
            orders: 2,
            k: 20.0,
            mode: None,
            degrees: None,
            basis_degree: 6,
            basis_modes: 3,
            perturbation: 0.01,
            target: OscTarget::Esc,
            state: None,
            max_newton_steps: 10,
            lipschitz_pairs: 50,
            lipschitz_radius: 1e-2,
            seed: 0,
            out: None,
            tolerances: Tolerances::default(),
            slopes: Slopes::default(),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads the file and resolves relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        let dir = path.parent().unwrap_or(Path::new("."));
        cfg.model = dir.join(&cfg.model);
        cfg.state = cfg.state.map(|s| dir.join(s));
        cfg.out = cfg.out.map(|s| dir.join(s));
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.model.as_os_str().is_empty() {
            return Err(CliError::Config("missing `model`".into()));
        }
        for (name, v) in self.tolerances.entries() {
            if !(v > 0.0) || !v.is_finite() {
                return Err(CliError::Config(format!("tolerance `{name}` must be positive, got {v}")));
            }
        }
        for (name, ks) in [("ladder", &self.ladder), ("probe_ladder", &self.probe_ladder)] {
            if ks.len() < 2 {
                return Err(CliError::Config(format!("`{name}` needs at least two values")));
            }
            if !(ks[0] > 0.0) || ks.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(CliError::Config(format!("`{name}` must be positive and strictly increasing")));
            }
        }
        if !(self.k > 0.0) {
            return Err(CliError::Config(format!("`k` must be positive, got {}", self.k)));
        }
        if self.orders == 0 || self.orders > 3 {
            return Err(CliError::Config(format!("`orders` must be 1, 2 or 3, got {}", self.orders)));
        }
        if self.slopes.rounds.len() < self.orders {
            return Err(CliError::Config(format!("`slopes.rounds` needs {} entries", self.orders)));
        }
        if self.basis_degree == 0 || self.basis_modes == 0 {
            return Err(CliError::Config("basis sizes must be positive".into()));
        }
        if !(self.lipschitz_radius > 0.0) || self.lipschitz_pairs == 0 {
            return Err(CliError::Config("Lipschitz probe needs a positive radius and pair count".into()));
        }
        if self.max_newton_steps == 0 {
            return Err(CliError::Config("`max_newton_steps` must be positive".into()));
        }
        Ok(())
    }

    pub fn model_text(&self) -> Result<String, CliError> {
        std::fs::read_to_string(&self.model).map_err(|e| CliError::Config(format!("{}: {e}", self.model.display())))
    }

    pub fn build_model(&self) -> Result<ModelFibration, CliError> {
        let text = self.model_text()?;
        let mc = ModelConfig::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", self.model.display())))?;
        build_model(&mc).map_err(|e| CliError::Config(format!("{}: {e}", self.model.display())))
    }

    pub fn mode_for(&self, model: &ModelFibration) -> Mode {
        self.mode.unwrap_or(match (model.kind, model.d) {
            (ModelKind::ProjBundle, d) if d > 0 => Mode::Extremal,
            _ => Mode::Csck,
        })
    }

    pub fn degrees_for(&self, model: &ModelFibration) -> Vec<i32> {
        self.degrees.clone().unwrap_or(vec![0, model.d])
    }
}
