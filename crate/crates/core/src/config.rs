//! Suite configuration in TOML.
//!
//! ```toml
//! [sampling]
//! points_per_target = 50      # default 50
//! seed = 7                    # default 0
//! strategy = "uniform"        # or "fixed"
//!
//! [fd]
//! step = 1e-3
//! field_step = 2e-3
//! richardson = true
//!
//! [output]
//! format = "json"             # or "text"
//! path = "report.json"        # stdout when absent
//!
//! [[target]]
//! name = "sphere:n=3"
//!
//! [[target]]
//! family = "sphere"
//! n = 2
//! r = 2.0
//! points = [[1.0, 0.3]]       # used by strategy = "fixed"
//!
//! [[check]]
//! name = "bochner"
//! tolerance = 1e-4            # optional override
//! ```
//!
//! With no `[[check]]` tables every registered check runs.

use std::collections::BTreeSet;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog;
use crate::fd::FdSpec;
use crate::suite::CheckId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("configuration parse error: {0}")]
    Parse(String),
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("configuration names no targets")]
    EmptySuite,
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        path: path.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Uniform,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Sampling {
    pub points_per_target: usize,
    pub seed: u64,
    pub strategy: Strategy,
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling {
            points_per_target: 50,
            seed: 0,
            strategy: Strategy::Uniform,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub format: Format,
    pub path: Option<PathBuf>,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            format: Format::Json,
            path: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTarget {
    name: Option<String>,
    family: Option<String>,
    n: Option<usize>,
    k: Option<usize>,
    r: Option<f64>,
    #[serde(default)]
    points: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCheck {
    name: String,
    tolerance: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    sampling: Sampling,
    #[serde(default)]
    fd: FdSpec,
    #[serde(default)]
    output: OutputSpec,
    #[serde(default)]
    target: Vec<RawTarget>,
    #[serde(default)]
    check: Vec<RawCheck>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TargetSpec {
    /// Canonical catalog name.
    pub name: String,
    pub points: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CheckSpec {
    pub id: CheckId,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub sampling: Sampling,
    pub fd: FdSpec,
    pub output: OutputSpec,
    pub targets: Vec<TargetSpec>,
    pub checks: Vec<CheckSpec>,
}

impl SuiteConfig {
    /// A config with defaults for the given targets and checks.
    pub fn new(targets: &[&str], checks: &[CheckId]) -> Result<Self, ConfigError> {
        let targets = targets
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let resolved = catalog::resolve(t).map_err(|m| invalid(format!("target[{i}].name"), m))?;
                Ok(TargetSpec {
                    name: resolved.name,
                    points: Vec::new(),
                })
            })
            .collect::<Result<Vec<_>, ConfigError>>()?;
        let checks = checks
            .iter()
            .map(|&id| CheckSpec {
                id,
                tolerance: id.default_tolerance(),
            })
            .collect();
        Ok(SuiteConfig {
            sampling: Sampling::default(),
            fd: FdSpec::default(),
            output: OutputSpec::default(),
            targets,
            checks,
        })
    }

    pub fn tolerance(&self, id: CheckId) -> Option<f64> {
        self.checks.iter().find(|c| c.id == id).map(|c| c.tolerance)
    }
}

fn target_name(i: usize, t: &RawTarget) -> Result<String, ConfigError> {
    let path = format!("target[{i}]");
    match (&t.name, &t.family) {
        (Some(_), Some(_)) => Err(invalid(path, "give either name or family, not both")),
        (None, None) => Err(invalid(path, "missing name or family")),
        (Some(name), None) => {
            if t.n.is_some() || t.k.is_some() || t.r.is_some() {
                return Err(invalid(path, "n, k and r go with family, not name"));
            }
            Ok(name.clone())
        }
        (None, Some(family)) => {
            let mut parts = Vec::new();
            if let Some(n) = t.n {
                parts.push(format!("n={n}"));
            }
            if let Some(k) = t.k {
                parts.push(format!("k={k}"));
            }
            if let Some(r) = t.r {
                parts.push(format!("r={r}"));
            }
            Ok(format!("{family}:{}", parts.join(",")))
        }
    }
}

/// Parses and validates a configuration document.
pub fn load_config(text: &str) -> Result<SuiteConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    raw.fd.validate().map_err(|e| invalid("fd", e.to_string()))?;
    if raw.sampling.points_per_target == 0 {
        return Err(invalid("sampling.points_per_target", "must be positive"));
    }

    let mut targets = Vec::with_capacity(raw.target.len());
    let mut seen = BTreeSet::new();
    for (i, t) in raw.target.iter().enumerate() {
        let name = target_name(i, t)?;
        let resolved = catalog::resolve(&name).map_err(|m| invalid(format!("target[{i}]"), m))?;
        if !seen.insert(resolved.name.clone()) {
            return Err(invalid(
                format!("target[{i}]"),
                format!("duplicate target {}", resolved.name),
            ));
        }
        let dim = resolved.dim();
        for (j, p) in t.points.iter().enumerate() {
            if p.len() != dim {
                return Err(invalid(
                    format!("target[{i}].points[{j}]"),
                    format!("expected {dim} coordinates, got {}", p.len()),
                ));
            }
            if !resolved.domain().distance_to_boundary(p).is_sign_positive() {
                return Err(invalid(
                    format!("target[{i}].points[{j}]"),
                    "point outside the chart domain",
                ));
            }
        }
        if raw.sampling.strategy == Strategy::Fixed && t.points.is_empty() {
            return Err(invalid(
                format!("target[{i}].points"),
                "strategy \"fixed\" needs at least one point",
            ));
        }
        targets.push(TargetSpec {
            name: resolved.name,
            points: t.points.clone(),
        });
    }
    if targets.is_empty() {
        return Err(ConfigError::EmptySuite);
    }

    let mut checks = Vec::new();
    if raw.check.is_empty() {
        checks.extend(CheckId::ALL.iter().map(|&id| CheckSpec {
            id,
            tolerance: id.default_tolerance(),
        }));
    }
    for (i, c) in raw.check.iter().enumerate() {
        let id = CheckId::from_name(&c.name)
            .ok_or_else(|| invalid(format!("check[{i}].name"), format!("unknown check {:?}", c.name)))?;
        if checks.iter().any(|s: &CheckSpec| s.id == id) {
            return Err(invalid(
                format!("check[{i}].name"),
                format!("duplicate check {:?}", c.name),
            ));
        }
        let tolerance = c.tolerance.unwrap_or(id.default_tolerance());
        if !(tolerance >= 0.0 && tolerance.is_finite()) {
            return Err(invalid(
                format!("check[{i}].tolerance"),
                "must be finite and non-negative",
            ));
        }
        checks.push(CheckSpec { id, tolerance });
    }

    Ok(SuiteConfig {
        sampling: raw.sampling,
        fd: raw.fd,
        output: raw.output,
        targets,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = load_config("[[target]]\nname = \"sphere:n=2\"\n[[check]]\nname = \"bochner\"\n").unwrap();
        assert_eq!(cfg.sampling.points_per_target, 50);
        assert_eq!(cfg.fd, FdSpec::default());
        assert_eq!(cfg.checks.len(), 1);
        assert_eq!(cfg.checks[0].tolerance, CheckId::Bochner.default_tolerance());
    }

    #[test]
    fn tolerance_override() {
        let text = "[[target]]\nname = \"sphere:n=3\"\n[[check]]\nname = \"lcf_reconstruction\"\ntolerance = 1e-3\n[[check]]\nname = \"eigenvalue_formulas\"\n";
        let cfg = load_config(text).unwrap();
        assert_eq!(cfg.tolerance(CheckId::LcfReconstruction), Some(1e-3));
        assert_eq!(
            cfg.tolerance(CheckId::EigenvalueFormulas),
            Some(CheckId::EigenvalueFormulas.default_tolerance())
        );
    }

    #[test]
    fn unknown_check_rejected() {
        let err = load_config("[[target]]\nname = \"sphere:n=2\"\n[[check]]\nname = \"frobnicate\"\n").unwrap_err();
        assert_eq!(
            err,
            ConfigError::Invalid {
                path: "check[0].name".into(),
                message: "unknown check \"frobnicate\"".into()
            }
        );
    }

    #[test]
    fn family_form_and_errors() {
        let cfg = load_config("[[target]]\nfamily = \"sphere\"\nn = 2\nr = 2.0\n").unwrap();
        assert_eq!(cfg.targets[0].name, "sphere:n=2,r=2");
        assert_eq!(cfg.checks.len(), CheckId::ALL.len());
        assert!(matches!(load_config(""), Err(ConfigError::EmptySuite)));
        assert!(matches!(
            load_config("[[target]]\nname = \"nowhere:n=2\"\n"),
            Err(ConfigError::Invalid { .. })
        ));
        assert!(matches!(
            load_config("[fd]\nstep = -1.0\n[[target]]\nname = \"sphere:n=2\"\n"),
            Err(ConfigError::Invalid { .. })
        ));
        assert!(matches!(
            load_config("[sampling]\npoints_per_target = 0\n[[target]]\nname = \"sphere:n=2\"\n"),
            Err(ConfigError::Invalid { .. })
        ));
        assert!(matches!(
            load_config("[sampling]\nbogus = 1\n"),
            Err(ConfigError::Parse(_))
        ));
    }

    #[test]
    fn fixed_points_validated() {
        let ok = "[sampling]\nstrategy = \"fixed\"\n[[target]]\nname = \"sphere:n=2\"\npoints = [[1.0, 0.0]]\n";
        assert_eq!(load_config(ok).unwrap().targets[0].points, vec![vec![1.0, 0.0]]);
        let bad = "[sampling]\nstrategy = \"fixed\"\n[[target]]\nname = \"sphere:n=2\"\npoints = [[1.0]]\n";
        assert!(matches!(load_config(bad), Err(ConfigError::Invalid { .. })));
        let missing = "[sampling]\nstrategy = \"fixed\"\n[[target]]\nname = \"sphere:n=2\"\n";
        assert!(matches!(load_config(missing), Err(ConfigError::Invalid { .. })));
    }
}
