//! Experiment configuration: a flat TOML file merged with command-line flags.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use ratpoints_core::counting::{Distance, QWindow, SharpDomain, Variant};
use ratpoints_core::manifold::{parse_builtin, parse_manifold_spec};
use ratpoints_core::sublevel::SetSpec;
use ratpoints_core::weights::{WeightSpec, WeightTuple};
use ratpoints_core::MongeMap;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "lowercase")]
pub enum CountKind {
    #[default]
    Smooth,
    Sharp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "lowercase")]
pub enum VariantArg {
    #[default]
    Pairs,
    Distinct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "lowercase")]
pub enum DistanceArg {
    #[default]
    Vertical,
    Euclidean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "lowercase")]
pub enum WindowArg {
    #[default]
    Upto,
    Dyadic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "lowercase")]
pub enum DomainArg {
    #[default]
    Cube,
    Ball,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "lowercase")]
pub enum CutoffArg {
    /// `W ≡ 0`: the whole count is the good part.
    #[default]
    None,
    /// Cutoff built from the sub-level set with the standard parameter choice.
    Sublevel,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Pairs => Variant::Pairs,
            VariantArg::Distinct => Variant::Distinct,
        }
    }
}

impl From<DistanceArg> for Distance {
    fn from(v: DistanceArg) -> Self {
        match v {
            DistanceArg::Vertical => Distance::Vertical,
            DistanceArg::Euclidean => Distance::Euclidean,
        }
    }
}

impl From<WindowArg> for QWindow {
    fn from(v: WindowArg) -> Self {
        match v {
            WindowArg::Upto => QWindow::UpTo,
            WindowArg::Dyadic => QWindow::Dyadic,
        }
    }
}

impl From<DomainArg> for SharpDomain {
    fn from(v: DomainArg) -> Self {
        match v {
            DomainArg::Cube => SharpDomain::UnitCube,
            DomainArg::Ball => SharpDomain::UnitBall,
        }
    }
}

/// Everything a run may need. Keys absent from both the file and the command
/// line fall back to the defaults below.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Builtin name (`parabola`, `moment_curve(3)`, ...) or path to a manifold file.
    pub manifold: Option<String>,
    pub weights: Option<WeightSpec>,
    #[serde(rename = "Q", alias = "q")]
    pub q: Option<Vec<u64>>,
    pub delta: Option<Vec<f64>>,
    pub eta: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub samples: Option<u64>,
    pub budget: Option<u128>,
    pub kind: Option<CountKind>,
    pub variant: Option<VariantArg>,
    pub distance: Option<DistanceArg>,
    pub window: Option<WindowArg>,
    pub domain: Option<DomainArg>,
    pub cutoff: Option<CutoffArg>,
    pub with_trunc_error: Option<u32>,
    pub probe_radius: Option<f64>,
    pub bkm_constant: Option<f64>,
    pub r: Option<Vec<f64>>,
    pub d: Option<usize>,
    pub set: Option<SetSpec>,
    pub n: Option<u32>,
    pub l: Option<u32>,
    pub eta_exact: Option<String>,
    pub tau: Option<String>,
    pub s: Option<String>,
    pub timing: Option<bool>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, path.parent())
    }

    pub fn parse(text: &str, base: Option<&Path>) -> Result<Self, CliError> {
        let mut cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))?;
        // relative manifold files are resolved against the config's directory
        if let (Some(m), Some(base)) = (&cfg.manifold, base) {
            if looks_like_path(m) && Path::new(m).is_relative() {
                cfg.manifold = Some(base.join(m).to_string_lossy().into_owned());
            }
        }
        Ok(cfg)
    }
}

fn looks_like_path(s: &str) -> bool {
    s.ends_with(".toml") || s.contains('/')
}

pub fn load_manifold(spec: Option<&str>) -> Result<MongeMap, CliError> {
    let spec = spec.ok_or_else(|| CliError::Config("no manifold given".into()))?;
    if let Some(m) = parse_builtin(spec).map_err(CliError::from_config)? {
        return Ok(m);
    }
    let path = PathBuf::from(spec);
    let text = std::fs::read_to_string(&path).map_err(|e| {
        CliError::Config(format!(
            "manifold `{spec}` is neither a builtin nor a readable file: {e}"
        ))
    })?;
    parse_manifold_spec(&text).map_err(CliError::from_config)
}

pub fn load_weights(spec: Option<WeightSpec>, d: usize) -> Result<WeightTuple, CliError> {
    match spec {
        None => Ok(WeightTuple::canonical(d)),
        Some(s) => WeightTuple::from_spec(d, s).map_err(CliError::from_config),
    }
}

/// Parses a set description given as the body of a TOML inline table, e.g.
/// `kind = "box", lo = [0.0], hi = [1.0]`.
pub fn parse_set(text: &str) -> Result<SetSpec, CliError> {
    #[derive(Deserialize)]
    struct Wrap {
        set: SetSpec,
    }
    let body = text.trim();
    let body = body
        .strip_prefix('{')
        .and_then(|b| b.strip_suffix('}'))
        .unwrap_or(body);
    let w: Wrap = toml::from_str(&format!("set = {{ {body} }}"))
        .map_err(|e| CliError::Config(format!("set spec: {e}")))?;
    Ok(w.set)
}
