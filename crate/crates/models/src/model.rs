//! Model catalogue: P¹×P¹ and the Hirzebruch surfaces P(O ⊕ O(d)) → P¹.
//!
//! Torus-invariant data live on the square of moment coordinates
//! `x ∈ [-1, 1]` (fibre) and `y ∈ [-1, 1]` (base).  In the affine chart
//! `(z, w)` with `t = log|z|²`, `s = log|w|²` these are
//!
//! ```text
//! y = tanh(t/2),   x = tanh(σ/2),   σ = s − d·log(1 + e^t)
//! ```
//!
//! so `y` is the height function of the round base and `x` the fibre
//! height of the reference metric.  Both are smooth on the whole surface,
//! which is why a single tensor Gauss–Legendre grid covers both charts.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::ModelError;
use crate::spectral;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Product,
    ProjBundle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    FullTorus,
    FibreTorus,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelKind::Product => write!(f, "Product"),
            ModelKind::ProjBundle => write!(f, "ProjBundle"),
        }
    }
}

impl fmt::Display for Symmetry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symmetry::FullTorus => write!(f, "FullTorus"),
            Symmetry::FibreTorus => write!(f, "FibreTorus"),
        }
    }
}

impl FromStr for ModelKind {
    type Err = ModelError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "Product" | "product" => Ok(ModelKind::Product),
            "ProjBundle" | "projbundle" | "proj_bundle" => Ok(ModelKind::ProjBundle),
            other => Err(ModelError::UnknownKind(other.to_string())),
        }
    }
}

impl FromStr for Symmetry {
    type Err = ModelError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "FullTorus" | "full_torus" => Ok(Symmetry::FullTorus),
            "FibreTorus" | "fibre_torus" => Ok(Symmetry::FibreTorus),
            other => Err(ModelError::UnknownSymmetry(other.to_string())),
        }
    }
}

/// Flat `key = value` model description.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub d: i32,
    pub fibre_nodes: usize,
    pub base_nodes: usize,
    pub fibre_azimuth: usize,
    pub base_azimuth: usize,
    pub symmetry: Symmetry,
}

impl ModelConfig {
    pub fn product(nodes: usize) -> Self {
        ModelConfig {
            kind: ModelKind::Product,
            d: 0,
            fibre_nodes: nodes,
            base_nodes: nodes,
            fibre_azimuth: nodes,
            base_azimuth: nodes,
            symmetry: Symmetry::FullTorus,
        }
    }

    pub fn proj_bundle(d: i32, nodes: usize) -> Self {
        ModelConfig { kind: ModelKind::ProjBundle, d, ..Self::product(nodes) }
    }

    /// Parses the key-value format.  Unknown keys are rejected so that typos
    /// do not silently fall back to defaults.
    pub fn parse(text: &str) -> Result<Self, ModelError> {
        let mut kind = None;
        let mut d = 0i32;
        let mut fibre_nodes = 24usize;
        let mut base_nodes = 24usize;
        let mut fibre_azimuth = None;
        let mut base_azimuth = None;
        let mut symmetry = Symmetry::FullTorus;
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ModelError::Parse {
                line: n + 1,
                msg: "expected `key = value`".into(),
            })?;
            let value = value.trim();
            let int = |v: &str| {
                v.parse::<i64>().map_err(|_| ModelError::Parse {
                    line: n + 1,
                    msg: format!("`{v}` is not an integer"),
                })
            };
            let count = |v: &str| -> Result<usize, ModelError> {
                let i = int(v)?;
                usize::try_from(i).map_err(|_| ModelError::Parse {
                    line: n + 1,
                    msg: format!("`{v}` must be non-negative"),
                })
            };
            match key.trim() {
                "kind" => kind = Some(value.parse()?),
                "d" => d = int(value)? as i32,
                "fibre_nodes" => fibre_nodes = count(value)?,
                "base_nodes" => base_nodes = count(value)?,
                "fibre_azimuth" => fibre_azimuth = Some(count(value)?),
                "base_azimuth" => base_azimuth = Some(count(value)?),
                "symmetry" => symmetry = value.parse()?,
                other => {
                    return Err(ModelError::Parse { line: n + 1, msg: format!("unknown key `{other}`") })
                }
            }
        }
        let kind = kind.ok_or(ModelError::Parse { line: 0, msg: "missing `kind`".into() })?;
        Ok(ModelConfig {
            kind,
            d,
            fibre_nodes,
            base_nodes,
            fibre_azimuth: fibre_azimuth.unwrap_or(fibre_nodes),
            base_azimuth: base_azimuth.unwrap_or(base_nodes),
            symmetry,
        })
    }

    pub fn to_text(&self) -> String {
        format!(
            "kind = {}\nd = {}\nfibre_nodes = {}\nbase_nodes = {}\nfibre_azimuth = {}\nbase_azimuth = {}\nsymmetry = {}\n",
            self.kind, self.d, self.fibre_nodes, self.base_nodes, self.fibre_azimuth, self.base_azimuth, self.symmetry
        )
    }
}

/// Gauss–Legendre colatitude grid on a round sphere, in `cos θ`.
#[derive(Debug, Clone)]
pub struct SphereGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub diff: DMatrix<f64>,
    pub azimuth: usize,
}

impl SphereGrid {
    pub fn new(nodes: usize, azimuth: usize) -> Result<Self, ModelError> {
        if nodes < 8 {
            return Err(ModelError::TooFewNodes(nodes));
        }
        if azimuth < 8 {
            return Err(ModelError::TooFewNodes(azimuth));
        }
        if azimuth % 2 == 1 {
            return Err(ModelError::OddAzimuth(azimuth));
        }
        let (x, w) = spectral::gauss_legendre(nodes);
        let diff = spectral::diff_matrix(&x);
        Ok(SphereGrid { nodes: x, weights: w, diff, azimuth })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Azimuthal sample angles.
    pub fn angles(&self) -> Vec<f64> {
        (0..self.azimuth).map(|k| 2.0 * std::f64::consts::PI * k as f64 / self.azimuth as f64).collect()
    }
}

/// A discretized model fibration `X → B` with `m = n = 1`.
#[derive(Debug, Clone)]
pub struct ModelFibration {
    pub kind: ModelKind,
    pub fibre_dim: usize,
    pub base_dim: usize,
    pub d: i32,
    pub fibre: SphereGrid,
    pub base: SphereGrid,
    pub symmetry: Symmetry,
}

/// Validates a configuration and builds the model.
pub fn build_model(config: &ModelConfig) -> Result<ModelFibration, ModelError> {
    if config.d < 0 {
        return Err(ModelError::NegativeDegree(config.d));
    }
    let d = match config.kind {
        ModelKind::Product => 0,
        ModelKind::ProjBundle => config.d,
    };
    Ok(ModelFibration {
        kind: config.kind,
        fibre_dim: 1,
        base_dim: 1,
        d,
        fibre: SphereGrid::new(config.fibre_nodes, config.fibre_azimuth)?,
        base: SphereGrid::new(config.base_nodes, config.base_azimuth)?,
        symmetry: config.symmetry,
    })
}

impl ModelFibration {
    pub fn nx(&self) -> usize {
        self.fibre.len()
    }

    pub fn ny(&self) -> usize {
        self.base.len()
    }

    pub fn len(&self) -> usize {
        self.nx() * self.ny()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, j: usize, i: usize) -> usize {
        j * self.nx() + i
    }

    pub fn x(&self) -> &[f64] {
        &self.fibre.nodes
    }

    pub fn y(&self) -> &[f64] {
        &self.base.nodes
    }

    pub fn df(&self) -> f64 {
        self.d as f64
    }

    pub fn config(&self) -> ModelConfig {
        ModelConfig {
            kind: self.kind,
            d: self.d,
            fibre_nodes: self.nx(),
            base_nodes: self.ny(),
            fibre_azimuth: self.fibre.azimuth,
            base_azimuth: self.base.azimuth,
            symmetry: self.symmetry,
        }
    }

    /// Same model on a different grid.
    pub fn with_nodes(&self, fibre_nodes: usize, base_nodes: usize) -> Result<Self, ModelError> {
        let mut c = self.config();
        c.fibre_nodes = fibre_nodes;
        c.base_nodes = base_nodes;
        c.fibre_azimuth = fibre_nodes + fibre_nodes % 2;
        c.base_azimuth = base_nodes + base_nodes % 2;
        build_model(&c)
    }

    pub fn describe(&self) -> String {
        match self.kind {
            ModelKind::Product => format!("P1xP1 ({}x{} nodes)", self.ny(), self.nx()),
            ModelKind::ProjBundle => format!("F_{} ({}x{} nodes)", self.d, self.ny(), self.nx()),
        }
    }
}
