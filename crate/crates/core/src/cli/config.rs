use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::curve::ParamCurve;
use crate::error::{Error, Result};
use crate::grid::ParamGrid;
use crate::maps::{AffinePath, FamilySpec};
use crate::typicality::TestInterval;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Sweep,
    Density,
    Orbit,
    Kneading,
    CheckI,
    CheckIii,
    Transversality,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Sweep => "sweep",
            Command::Density => "density",
            Command::Orbit => "orbit",
            Command::Kneading => "kneading",
            Command::CheckI => "check-i",
            Command::CheckIii => "check-iii",
            Command::Transversality => "transversality",
        }
    }
}

/// A named preset or a full family description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FamilyChoice {
    Preset(String),
    Spec(FamilySpec),
}

/// Everything a run depends on. Serialised with every knob filled in; the
/// hash of that form identifies the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub command: Option<Command>,
    #[serde(default)]
    pub family: Option<FamilyChoice>,
    /// Slope path for the skew tent preset: `symmetric` or `increasing`.
    #[serde(default)]
    pub path: Option<String>,
    /// Starting point `X(a)`; sweeps start from random points when absent.
    #[serde(default)]
    pub x: Option<ParamCurve>,
    #[serde(default)]
    pub grid: Option<ParamGrid>,
    /// Size of the default grid when `grid` is absent.
    #[serde(default)]
    pub grid_size: Option<usize>,
    #[serde(default)]
    pub a: Option<f64>,
    #[serde(default)]
    pub a0: Option<f64>,
    #[serde(default)]
    pub a1: Option<f64>,
    #[serde(default)]
    pub a2: Option<f64>,
    #[serde(default = "defaults::n")]
    pub n: usize,
    #[serde(default = "defaults::burn_in")]
    pub burn_in: usize,
    #[serde(default = "defaults::bins")]
    pub bins: usize,
    #[serde(default = "defaults::depth")]
    pub depth: usize,
    #[serde(default = "defaults::j_max")]
    pub j_max: usize,
    /// Minimal `τ` with `λ^τ > 3` when absent.
    #[serde(default)]
    pub tau: Option<usize>,
    #[serde(default = "defaults::threshold")]
    pub threshold: f64,
    /// Required pass fraction of a sweep.
    #[serde(default = "defaults::pass_fraction")]
    pub pass_fraction: f64,
    #[serde(default = "defaults::tol")]
    pub tol: f64,
    #[serde(default = "defaults::max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub test_intervals: Vec<TestInterval>,
    // Execution knobs below do not change results and stay out of the echo
    // and the hash.
    #[serde(default = "defaults::out", skip_serializing)]
    pub out: String,
    #[serde(default, skip_serializing)]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing)]
    pub serial: bool,
}

mod defaults {
    pub fn n() -> usize {
        1_000_000
    }
    pub fn burn_in() -> usize {
        1000
    }
    pub fn bins() -> usize {
        4096
    }
    pub fn depth() -> usize {
        10
    }
    pub fn j_max() -> usize {
        40
    }
    pub fn threshold() -> f64 {
        0.01
    }
    pub fn pass_fraction() -> f64 {
        0.95
    }
    pub fn tol() -> f64 {
        1e-12
    }
    pub fn max_iter() -> usize {
        100_000
    }
    pub fn out() -> String {
        ".".into()
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        parse_config("{}").expect("empty config is valid")
    }
}

fn config_error(field: &str, message: impl Into<String>) -> Error {
    Error::Config {
        field: field.into(),
        message: message.into(),
    }
}

/// Parses JSON, fills defaults and validates ranges.
pub fn parse_config(json: &str) -> Result<RunConfig> {
    let cfg: RunConfig = serde_json::from_str(json).map_err(|e| {
        let msg = e.to_string();
        let field = msg
            .split('`')
            .nth(1)
            .filter(|_| msg.starts_with("unknown field") || msg.starts_with("missing field"))
            .unwrap_or("config")
            .to_string();
        Error::Config {
            field,
            message: msg,
        }
    })?;
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bins < 2 {
            return Err(config_error(
                "bins",
                format!("must be at least 2, got {}", self.bins),
            ));
        }
        if self.depth == 0 {
            return Err(config_error("depth", "must be at least 1"));
        }
        if self.j_max == 0 {
            return Err(config_error("j_max", "must be at least 1"));
        }
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return Err(config_error("threshold", "must lie in (0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.pass_fraction) {
            return Err(config_error("pass_fraction", "must lie in [0, 1]"));
        }
        if !(self.tol > 0.0) {
            return Err(config_error("tol", "must be positive"));
        }
        if self.max_iter == 0 {
            return Err(config_error("max_iter", "must be at least 1"));
        }
        if self.threads == Some(0) {
            return Err(config_error("threads", "must be at least 1"));
        }
        if self.grid_size == Some(0) {
            return Err(config_error("grid_size", "must be at least 1"));
        }
        if self.tau == Some(0) {
            return Err(config_error("tau", "must be at least 1"));
        }
        for (name, v) in [
            ("a", self.a),
            ("a0", self.a0),
            ("a1", self.a1),
            ("a2", self.a2),
        ] {
            if v.is_some_and(|v| !v.is_finite()) {
                return Err(config_error(name, "must be finite"));
            }
        }
        if let Some(x) = &self.x {
            x.validate()?;
        }
        if let Some(p) = &self.path {
            if p != "symmetric" && p != "increasing" {
                return Err(config_error("path", format!("unknown path `{p}`")));
            }
        }
        if let Some(FamilyChoice::Preset(name)) = &self.family {
            preset(name, self.path.as_deref())?;
        }
        Ok(())
    }

    /// Compact JSON with all defaults filled in.
    pub fn normalized_json(&self) -> String {
        serde_json::to_string(self).expect("config serialises")
    }

    /// Hex SHA-256 of [`normalized_json`](Self::normalized_json).
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.normalized_json().as_bytes()))
    }

    pub fn family_spec(&self) -> Result<FamilySpec> {
        match &self.family {
            None => Err(config_error("family", "no family given")),
            Some(FamilyChoice::Spec(s)) => Ok(s.clone()),
            Some(FamilyChoice::Preset(name)) => preset(name, self.path.as_deref()),
        }
    }
}

/// Built-in families.
///
/// `beta`: `a x mod 1`, `a ∈ [1.01, 4]`. `markov`: `g = id`, `a ∈ [0.05, 0.95]`.
/// `skewtent`: `α = β = 2 + a` on `[0, 0.5]` (`symmetric`, the default) or
/// `(1.3 + 0.7a, 1.5 + 0.5a)` on `[0, 1]` (`increasing`).
pub fn preset(name: &str, path: Option<&str>) -> Result<FamilySpec> {
    match name {
        "beta" => Ok(FamilySpec::beta_mod_one(1.01, 4.0)),
        "markov" => Ok(FamilySpec::markov_identity(0.05, 0.95)),
        "skewtent" | "skew_tent" | "skew-tent" => match path.unwrap_or("symmetric") {
            "symmetric" => Ok(FamilySpec::skew_tent(
                0.0,
                0.5,
                AffinePath::new(2.0, 1.0),
                AffinePath::new(2.0, 1.0),
            )),
            "increasing" => Ok(FamilySpec::skew_tent(
                0.0,
                1.0,
                AffinePath::new(1.3, 0.7),
                AffinePath::new(1.5, 0.5),
            )),
            p => Err(config_error("path", format!("unknown path `{p}`"))),
        },
        other => Err(config_error("family", format!("unknown preset `{other}`"))),
    }
}
