//! Run configuration: every tunable as a flat key/value document (TOML on
//! disk). Unknown keys are rejected, and the effective configuration is
//! echoed into every output artifact.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{FeatureConfig, LAYOUT_VERSION};
use crate::svm::{GammaSetting, KernelKind, TrainConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("io error reading config: {0}")]
    Io(#[from] std::io::Error),
}

/// How the cascade's stage predicates score a model against theta.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbabilityMode {
    /// Platt posterior compared against theta (default).
    Platt,
    /// Raw decision value compared against theta (ablation mode).
    Margin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Stage threshold for the noise and music detectors.
    pub theta: f64,
    pub probability_mode: ProbabilityMode,
    pub svm_c: f64,
    pub svm_gamma: GammaSetting,
    pub kernel: KernelKind,
    pub smo_tolerance: f64,
    pub smo_max_passes: usize,
    pub smo_max_iterations: usize,
    /// Coarse (C, gamma) grid search per classifier when enabled.
    pub grid_search: bool,
    pub seed: u64,
    /// Minimum cross-validation gain to keep adding feature groups.
    pub selection_delta: f64,
    pub layout_version: u32,
    #[serde(flatten)]
    pub features: FeatureConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            theta: 0.5,
            probability_mode: ProbabilityMode::Platt,
            svm_c: 1.0,
            svm_gamma: GammaSetting::Auto,
            kernel: KernelKind::Rbf,
            smo_tolerance: 1e-3,
            smo_max_passes: 10,
            smo_max_iterations: 100_000,
            grid_search: false,
            seed: 0,
            selection_delta: 0.005,
            layout_version: LAYOUT_VERSION,
            features: FeatureConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<RunConfig, ConfigError> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        RunConfig::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(ConfigError::Invalid(format!(
                "theta must be in (0, 1), got {}",
                self.theta
            )));
        }
        if self.svm_c <= 0.0 || !self.svm_c.is_finite() {
            return Err(ConfigError::Invalid(format!("svm_c must be positive, got {}", self.svm_c)));
        }
        if self.smo_tolerance <= 0.0 || !self.smo_tolerance.is_finite() {
            return Err(ConfigError::Invalid("smo_tolerance must be positive".into()));
        }
        if self.smo_max_passes == 0 || self.smo_max_iterations == 0 {
            return Err(ConfigError::Invalid("SMO iteration limits must be positive".into()));
        }
        if self.selection_delta.is_nan() || self.selection_delta < 0.0 {
            return Err(ConfigError::Invalid("selection_delta must be non-negative".into()));
        }
        if self.layout_version != LAYOUT_VERSION {
            return Err(ConfigError::Invalid(format!(
                "unsupported layout_version {} (this build speaks {LAYOUT_VERSION})",
                self.layout_version
            )));
        }
        self.features.validate().map_err(ConfigError::Invalid)
    }

    /// SVM trainer view of this configuration.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            c: self.svm_c,
            gamma: self.svm_gamma,
            kernel: self.kernel,
            smo_tolerance: self.smo_tolerance,
            max_passes: self.smo_max_passes,
            max_iterations: self.smo_max_iterations,
            seed: self.seed,
        }
    }

    /// Canonical single-line `key=value` echo, embedded in output artifacts.
    pub fn echo_string(&self) -> String {
        let gamma = match self.svm_gamma {
            GammaSetting::Auto => "auto".to_string(),
            GammaSetting::Fixed(g) => format!("{g}"),
        };
        let kernel = match self.kernel {
            KernelKind::Rbf => "rbf",
            KernelKind::Linear => "linear",
        };
        let mode = match self.probability_mode {
            ProbabilityMode::Platt => "platt",
            ProbabilityMode::Margin => "margin",
        };
        let f = &self.features;
        // Keys sorted alphabetically for a stable echo.
        format!(
            "grid_search={} hzcrr_factor={} kernel={kernel} layout_version={} \
             lpc_order={} lsp_order={} lster_factor={} mel_filter_count={} \
             nfr_autocorr_threshold={} pitch_max_hz={} pitch_min_hz={} \
             probability_mode={mode} rolloff_fraction={} seed={} selection_delta={} \
             silence_rms_threshold={} smo_max_iterations={} smo_max_passes={} \
             smo_tolerance={} svm_c={} svm_gamma={gamma} theta={}",
            self.grid_search,
            f.hzcrr_factor,
            self.layout_version,
            f.lpc_order,
            f.lsp_order,
            f.lster_factor,
            f.mel_filter_count,
            f.nfr_autocorr_threshold,
            f.pitch_max_hz,
            f.pitch_min_hz,
            f.rolloff_fraction,
            self.seed,
            self.selection_delta,
            f.silence_rms_threshold,
            self.smo_max_iterations,
            self.smo_max_passes,
            self.smo_tolerance,
            self.svm_c,
            self.theta,
        )
    }

    /// Standard two-line artifact preamble (tool version + config echo).
    pub fn artifact_header(&self) -> String {
        format!(
            "# avac {}\n# config {}\n",
            crate::TOOL_VERSION,
            self.echo_string()
        )
    }
}

/// Mixes a stage tag into a base seed so each pipeline step draws from an
/// independent, reproducible stream.
pub fn derive_seed(base: u64, tag: &str) -> u64 {
    // FNV-1a over the tag, then splitmix-style avalanche with the base.
    let mut h: u64 = 0xcbf29ce484222325;
    for b in tag.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    let mut z = base.wrapping_add(h).wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}
