//! Run configuration: an optional TOML file merged with command-line flags.
//!
//! Flags take precedence over the file. When both set the same key to
//! different values the conflict is logged at warn level.

use std::fmt::Debug;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::drag::{self, NoiseKind, NoiseSpec};
use crate::newsvendor::{CorrectorKind, NewsvendorConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid config file {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Drag,
    Newsvendor,
    CriteriaSweep,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Drag => "drag",
            Experiment::Newsvendor => "newsvendor",
            Experiment::CriteriaSweep => "criteria-sweep",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DragFile {
    pub noise: Option<String>,
    pub sigma: Option<f64>,
    pub eta: Option<f64>,
    pub radii: Option<String>,
    pub n: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewsvendorFile {
    pub corrector: Option<String>,
    pub delta: Option<f64>,
    pub repeats: Option<usize>,
    pub delta_grid: Option<Vec<f64>>,
    pub n_total: Option<usize>,
    pub perturbation: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    pub noise: Option<String>,
    pub sigma: Option<f64>,
    pub eta: Option<Vec<f64>>,
    pub radii: Option<String>,
}

/// The on-disk layout. Every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub experiment: Option<Experiment>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub allow_extrapolation: Option<bool>,
    pub sequential: Option<bool>,
    #[serde(default)]
    pub drag: DragFile,
    #[serde(default)]
    pub newsvendor: NewsvendorFile,
    #[serde(default)]
    pub criteria_sweep: SweepFile,
}

impl FileConfig {
    pub fn parse(text: &str, path: &Path) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse { path: path.to_path_buf(), message: e.to_string() })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text, path)
    }
}

/// Values given on the command line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub allow_extrapolation: Option<bool>,
    pub sequential: Option<bool>,
    pub noise: Option<String>,
    pub sigma: Option<f64>,
    pub eta: Option<f64>,
    pub radii: Option<String>,
    pub corrector: Option<String>,
    pub delta: Option<f64>,
    pub repeats: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DragSettings {
    pub noise: NoiseSpec,
    pub eta: f64,
    pub radii: Vec<f64>,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NewsvendorSettings {
    pub corrector: CorrectorKind,
    pub model: NewsvendorConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSettings {
    pub noises: Vec<NoiseSpec>,
    pub etas: Vec<f64>,
    pub radii: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
pub enum Settings {
    Drag(DragSettings),
    Newsvendor(NewsvendorSettings),
    CriteriaSweep(SweepSettings),
}

/// A fully resolved and validated configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub allow_extrapolation: bool,
    pub sequential: bool,
    pub settings: Settings,
}

impl RunConfig {
    pub fn experiment(&self) -> Experiment {
        match self.settings {
            Settings::Drag(_) => Experiment::Drag,
            Settings::Newsvendor(_) => Experiment::Newsvendor,
            Settings::CriteriaSweep(_) => Experiment::CriteriaSweep,
        }
    }
}

pub const DEFAULT_RADII: &str = "0.1:2.0:0.1";
pub const DEFAULT_OUT: &str = "out";

fn pick<T: PartialEq + Debug>(key: &str, flag: Option<T>, file: Option<T>) -> Option<T> {
    match (flag, file) {
        (Some(f), Some(v)) => {
            if f != v {
                log::warn!("'{key}' given as {f:?} on the command line and {v:?} in the config file; using {f:?}");
            }
            Some(f)
        }
        (f, v) => f.or(v),
    }
}

fn noise_spec(kind: Option<String>, sigma: Option<f64>, allow_extrapolation: bool) -> Result<NoiseSpec, ConfigError> {
    let kind: NoiseKind = kind.as_deref().unwrap_or("gaussian").parse().map_err(|e: crate::BapcError| invalid(e.to_string()))?;
    if kind == NoiseKind::None {
        if sigma.is_some_and(|s| s != 0.0) {
            log::warn!("sigma is ignored for noise 'none'");
        }
        return Ok(NoiseSpec::NONE);
    }
    let sigma = sigma.unwrap_or(2.0);
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(invalid(format!("sigma must be positive, got {sigma}")));
    }
    if ![1.0, 2.0, 3.0].contains(&sigma) && !allow_extrapolation {
        return Err(invalid(format!("sigma {sigma} is outside {{1, 2, 3}}; pass --allow-extrapolation to run it anyway")));
    }
    Ok(NoiseSpec { kind, sigma })
}

fn eta_value(eta: f64) -> Result<f64, ConfigError> {
    if eta > 0.0 && eta <= 1.0 {
        Ok(eta)
    } else {
        Err(invalid(format!("eta must lie in (0, 1], got {eta}")))
    }
}

fn radii_list(spec: &str) -> Result<Vec<f64>, ConfigError> {
    let radii = drag::parse_radii(spec).map_err(|e| invalid(e.to_string()))?;
    if radii.is_empty() || radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(invalid(format!("radii must be positive, got '{spec}'")));
    }
    Ok(radii)
}

/// Merge `file` and `flags` for `experiment`, apply defaults and validate.
pub fn resolve(experiment: Experiment, file: FileConfig, flags: Overrides) -> Result<RunConfig, ConfigError> {
    if let Some(e) = file.experiment {
        if e != experiment {
            log::warn!("config file is for '{}' but '{}' was requested; using '{}'", e.name(), experiment.name(), experiment.name());
        }
    }
    let seed = pick("seed", flags.seed, file.seed).unwrap_or(0);
    let out_dir = pick("out", flags.out, file.out).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let allow_extrapolation = pick("allow_extrapolation", flags.allow_extrapolation, file.allow_extrapolation).unwrap_or(false);
    let sequential = pick("sequential", flags.sequential, file.sequential).unwrap_or(false);

    let settings = match experiment {
        Experiment::Drag => {
            let f = file.drag;
            let noise = noise_spec(pick("drag.noise", flags.noise, f.noise), pick("drag.sigma", flags.sigma, f.sigma), allow_extrapolation)?;
            let eta = eta_value(pick("drag.eta", flags.eta, f.eta).unwrap_or(1.0))?;
            let radii = radii_list(&pick("drag.radii", flags.radii, f.radii).unwrap_or_else(|| DEFAULT_RADII.into()))?;
            let n = f.n.unwrap_or(100);
            if n < 2 {
                return Err(invalid(format!("drag.n must be at least 2, got {n}")));
            }
            Settings::Drag(DragSettings { noise, eta, radii, n })
        }
        Experiment::Newsvendor => {
            let f = file.newsvendor;
            let corrector: CorrectorKind = pick("newsvendor.corrector", flags.corrector, f.corrector)
                .as_deref()
                .unwrap_or("rf")
                .parse()
                .map_err(|e: crate::BapcError| invalid(e.to_string()))?;
            let defaults = NewsvendorConfig::default();
            let model = NewsvendorConfig {
                delta: pick("newsvendor.delta", flags.delta, f.delta).unwrap_or(defaults.delta),
                mc_repeats: pick("newsvendor.repeats", flags.repeats, f.repeats).unwrap_or(defaults.mc_repeats),
                delta_grid: f.delta_grid.unwrap_or(defaults.delta_grid.clone()),
                n_total: f.n_total.unwrap_or(defaults.n_total),
                perturbation: f.perturbation.unwrap_or(defaults.perturbation),
                seed,
                ..defaults
            };
            model.validate().map_err(|e| invalid(e.to_string()))?;
            if model.delta_grid.is_empty() {
                return Err(invalid("newsvendor.delta_grid is empty"));
            }
            Settings::Newsvendor(NewsvendorSettings { corrector, model })
        }
        Experiment::CriteriaSweep => {
            let f = file.criteria_sweep;
            let kind = pick("criteria_sweep.noise", flags.noise, f.noise);
            let sigma = pick("criteria_sweep.sigma", flags.sigma, f.sigma);
            let noises = if kind.is_none() && sigma.is_none() {
                NoiseSpec::standard_settings()
            } else {
                vec![noise_spec(kind, sigma, allow_extrapolation)?]
            };
            let etas = match pick("criteria_sweep.eta", flags.eta.map(|e| vec![e]), f.eta) {
                Some(v) if v.is_empty() => return Err(invalid("criteria_sweep.eta is empty")),
                Some(v) => v.into_iter().map(eta_value).collect::<Result<Vec<_>, _>>()?,
                None => drag::ETA_GRID.to_vec(),
            };
            let radii = radii_list(&pick("criteria_sweep.radii", flags.radii, f.radii).unwrap_or_else(|| DEFAULT_RADII.into()))?;
            Settings::CriteriaSweep(SweepSettings { noises, etas, radii })
        }
    };
    Ok(RunConfig { seed, out_dir, allow_extrapolation, sequential, settings })
}
