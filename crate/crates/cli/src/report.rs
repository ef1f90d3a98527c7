//! Check records and the JSON report.

use std::path::{Path, PathBuf};

use serde::{Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    /// `value ≤ tolerance`
    Le,
    /// `value ≥ tolerance`
    Ge,
    /// `value = tolerance`
    Eq,
}

/// Serializes non-finite values as strings, which JSON numbers cannot hold.
fn number<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str(&v.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    #[serde(serialize_with = "number")]
    pub value: f64,
    #[serde(serialize_with = "number")]
    pub tolerance: f64,
    pub relation: Relation,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, tolerance: f64, relation: Relation) -> Self {
        let pass = match relation {
            Relation::Le => value <= tolerance,
            Relation::Ge => value >= tolerance,
            Relation::Eq => value == tolerance,
        };
        Check { name: name.into(), value, tolerance, relation, pass }
    }

    pub fn le(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self::new(name, value, tolerance, Relation::Le)
    }

    pub fn ge(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self::new(name, value, tolerance, Relation::Ge)
    }

    pub fn eq(name: impl Into<String>, value: f64, expected: f64) -> Self {
        Self::new(name, value, expected, Relation::Eq)
    }

    /// One line, `PASS name: value <= tol`.
    pub fn line(&self) -> String {
        let op = match self.relation {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "==",
        };
        format!("{} {}: {:e} {op} {:e}", if self.pass { "PASS" } else { "FAIL" }, self.name, self.value, self.tolerance)
    }
}

/// A reported number that is not a pass/fail check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Observation {
    pub name: String,
    #[serde(serialize_with = "number")]
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub command: String,
    pub inputs_hash: String,
    pub seed: u64,
    pub pass: bool,
    pub checks: Vec<Check>,
    pub observations: Vec<Observation>,
    /// Paths relative to the output directory.
    pub artifacts: Vec<String>,
}

impl Report {
    pub fn new(command: &str, inputs_hash: String, seed: u64) -> Self {
        Report {
            command: command.to_string(),
            inputs_hash,
            seed,
            pass: true,
            checks: Vec::new(),
            observations: Vec::new(),
            artifacts: Vec::new(),
        }
    }

    /// Adds checks; names must be unique within a report.
    pub fn extend(&mut self, checks: impl IntoIterator<Item = Check>) {
        for c in checks {
            assert!(self.checks.iter().all(|o| o.name != c.name), "duplicate check `{}`", c.name);
            self.pass &= c.pass;
            self.checks.push(c);
        }
    }

    pub fn observe(&mut self, name: impl Into<String>, value: f64) {
        self.observations.push(Observation { name: name.into(), value });
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Hex SHA-256 of the concatenated parts, each length-prefixed.
pub fn inputs_hash(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Output directory that records what it writes.
pub struct Artifacts {
    dir: PathBuf,
    written: Vec<String>,
}

impl Artifacts {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)?;
        Ok(Artifacts { dir: dir.to_path_buf(), written: Vec::new() })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        std::fs::write(self.dir.join(name), contents)?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn into_list(self) -> Vec<String> {
        self.written
    }
}
