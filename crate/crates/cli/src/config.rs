//! Run configuration: TOML with one section per module, validated field by field.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wof_core::engine::WorkMode;
use wof_core::noise::{NoiseCaseRegistry, NoiseConfig};
use wof_core::photostatistics::{check_nbar, SplitterConfig};
use wof_core::report::Metadata;
use wof_core::thermo::DetectorThermalState;
use wof_core::WofError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngineSection {
    pub nbar: f64,
    pub kappa: f64,
    pub beta: f64,
    pub mode: String,
    pub unsqueeze: bool,
}

impl Default for EngineSection {
    fn default() -> Self {
        EngineSection { nbar: 10.0, kappa: 0.902, beta: 0.78, mode: "exact".into(), unsqueeze: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSection {
    pub kappa_d: f64,
    pub n_tau: f64,
    pub n_h: f64,
    pub n_lo: f64,
    pub n_d: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        let n = NoiseConfig::IDEAL;
        NoiseSection { kappa_d: n.kappa_d, n_tau: n.n_tau, n_h: n.n_h, n_lo: n.n_lo, n_d: n.n_d }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorSection {
    pub t_d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McSection {
    pub trials: u64,
    pub seed: u64,
    /// Feedforward rule used by the simulation: "gaussian" or "exact".
    pub feedforward: String,
}

impl Default for McSection {
    fn default() -> Self {
        McSection { trials: 100_000, seed: 2024, feedforward: "gaussian".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub nbar_min: f64,
    pub nbar_max: f64,
    pub points: usize,
    /// Log-spaced n̄ grid instead of linear.
    pub log: bool,
    pub noise_case: String,
    pub param_min: f64,
    pub param_max: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            nbar_min: 1.0,
            nbar_max: 20.0,
            points: 40,
            log: false,
            noise_case: "imperfect_detector".into(),
            param_min: 0.5,
            param_max: 1.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub engine: EngineSection,
    pub noise: NoiseSection,
    pub detector: DetectorSection,
    pub mc: McSection,
    pub sweep: SweepSection,
    pub output: OutputSection,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("cannot read {path}: {reason}")]
    Read { path: String, reason: String },
    #[error("{path}: {reason}")]
    Parse { path: String, reason: String },
    #[error("{field}: {reason}")]
    Field { field: String, reason: String },
}

fn field(section: &str, err: WofError) -> ConfigError {
    match err {
        WofError::InvalidParameter { name, reason } => ConfigError::Field { field: format!("{section}.{name}"), reason },
        other => ConfigError::Field { field: section.to_string(), reason: other.to_string() },
    }
}

fn check(ok: bool, name: &str, reason: String) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(ConfigError::Field { field: name.to_string(), reason })
    }
}

impl RunConfig {
    pub fn parse(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse { path: origin.to_string(), reason: e.to_string() })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read { path: path.display().to_string(), reason: e.to_string() })?;
        RunConfig::parse(&text, &path.display().to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let e = &self.engine;
        check_nbar(e.nbar).map_err(|err| field("engine", err))?;
        self.splitter()?;
        self.work_mode()?;
        self.noise()?;
        DetectorThermalState::new(0.0, self.detector.t_d).map_err(|err| field("detector", err))?;
        check(self.mc.trials >= 1, "mc.trials", format!("must be >= 1, got {}", self.mc.trials))?;
        check(
            ["gaussian", "exact"].contains(&self.mc.feedforward.as_str()),
            "mc.feedforward",
            format!("must be `gaussian` or `exact`, got `{}`", self.mc.feedforward),
        )?;
        let s = &self.sweep;
        check(s.nbar_min > 0.0 && s.nbar_min.is_finite(), "sweep.nbar_min", format!("must be finite and > 0, got {}", s.nbar_min))?;
        check(s.nbar_max >= s.nbar_min && s.nbar_max.is_finite(), "sweep.nbar_max", format!("must be finite and >= nbar_min, got {}", s.nbar_max))?;
        check(s.points >= 1, "sweep.points", "must be >= 1".into())?;
        NoiseCaseRegistry::standard().get(&s.noise_case).map_err(|err| field("sweep.noise_case", err))?;
        check(s.param_min.is_finite(), "sweep.param_min", format!("must be finite, got {}", s.param_min))?;
        check(s.param_max >= s.param_min && s.param_max.is_finite(), "sweep.param_max", format!("must be finite and >= param_min, got {}", s.param_max))?;
        Ok(())
    }

    pub fn splitter(&self) -> Result<SplitterConfig, ConfigError> {
        SplitterConfig::new(self.engine.kappa, self.engine.beta).map_err(|err| field("engine", err))
    }

    pub fn work_mode(&self) -> Result<WorkMode, ConfigError> {
        self.engine.mode.parse().map_err(|err| field("engine.mode", err))
    }

    pub fn noise(&self) -> Result<NoiseConfig, ConfigError> {
        let n = &self.noise;
        NoiseConfig::new(n.kappa_d, n.n_tau, n.n_h, n.n_lo, n.n_d).map_err(|err| field("noise", err))
    }

    /// n̄ grid of the sweep section, ascending.
    pub fn nbar_grid(&self) -> Vec<f64> {
        let s = &self.sweep;
        grid(s.nbar_min, s.nbar_max, s.points, s.log)
    }

    pub fn param_grid(&self) -> Vec<f64> {
        let s = &self.sweep;
        grid(s.param_min, s.param_max, s.points, false)
    }

    /// Every field as `section.key = value` metadata.
    pub fn echo(&self, meta: &mut Metadata) {
        let value = toml::Value::try_from(self).expect("config serializes");
        if let toml::Value::Table(sections) = value {
            for (name, section) in sections {
                if let toml::Value::Table(fields) = section {
                    for (key, v) in fields {
                        meta.push(&format!("{name}.{key}"), v);
                    }
                }
            }
        }
    }
}

pub fn grid(lo: f64, hi: f64, points: usize, log: bool) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    (0..points)
        .map(|i| {
            let t = i as f64 / (points - 1) as f64;
            if i == points - 1 {
                hi
            } else if log {
                (lo.ln() + t * (hi.ln() - lo.ln())).exp()
            } else {
                lo + t * (hi - lo)
            }
        })
        .collect()
}
