//! Bundle files: one versioned text document per environment holding the
//! six pair models, the baseline split model, masks, scaler, noise centroid,
//! theta, and the effective configuration.

use super::{CascadeError, Environment, ModelBundle, PairKey, PairModel};
use crate::config::ProbabilityMode;
use crate::features::FeatureConfig;
use crate::selection::FeatureMask;
use crate::svm::model_io::{format_f64, read_model, write_model};
use crate::svm::StandardScaler;

pub const BUNDLE_FORMAT_VERSION: u32 = 1;

fn err(msg: impl Into<String>) -> CascadeError {
    CascadeError::BundleFormat(msg.into())
}

fn join_f64(values: &[f64]) -> String {
    values
        .iter()
        .map(|&v| format_f64(v))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Renders a bundle as a deterministic text document.
pub fn write_bundle(bundle: &ModelBundle) -> String {
    let mut out = String::new();
    out.push_str(&format!("avac-bundle {BUNDLE_FORMAT_VERSION}\n"));
    out.push_str(&format!("tool_version {}\n", crate::TOOL_VERSION));
    out.push_str(&format!("environment {}\n", bundle.environment.id()));
    out.push_str(&format!("layout_version {}\n", bundle.layout_version));
    out.push_str(&format!("theta {}\n", format_f64(bundle.theta)));
    let mode = match bundle.probability_mode {
        ProbabilityMode::Platt => "platt",
        ProbabilityMode::Margin => "margin",
    };
    out.push_str(&format!("probability_mode {mode}\n"));
    out.push_str(&format!("config {}\n", bundle.config_echo));
    out.push_str(&format!(
        "feature_config {}\n",
        toml::to_string(&bundle.feature_config)
            .expect("feature config serializes")
            .trim_end()
            .replace('\n', ";")
    ));
    out.push_str(&format!("noise_centroid {}\n", join_f64(&bundle.noise_centroid)));
    for (key, pair) in PairKey::ALL.iter().zip(&bundle.pair_models) {
        out.push_str(&format!("pair {}\n", key.name()));
        out.push_str(&format!("mask {}\n", pair.mask.names()));
        out.push_str("model\n");
        out.push_str(&write_model(&pair.model, &bundle.scaler));
        out.push_str("end_model\n");
    }
    out.push_str("pair baseline_split\n");
    out.push_str(&format!("mask {}\n", bundle.baseline_split.mask.names()));
    out.push_str("model\n");
    out.push_str(&write_model(&bundle.baseline_split.model, &bundle.scaler));
    out.push_str("end_model\n");
    out.push_str("end\n");
    out
}

fn field<'a>(
    lines: &mut impl Iterator<Item = &'a str>,
    key: &str,
) -> Result<String, CascadeError> {
    let line = lines
        .next()
        .ok_or_else(|| err(format!("missing field {key}")))?;
    line.strip_prefix(key)
        .map(|rest| rest.trim().to_string())
        .ok_or_else(|| err(format!("expected {key}, got {line:?}")))
}

fn read_pair<'a>(
    lines: &mut impl Iterator<Item = &'a str>,
    expected_name: &str,
) -> Result<(PairModel, StandardScaler), CascadeError> {
    let pair_name = field(lines, "pair")?;
    if pair_name != expected_name {
        return Err(err(format!("expected pair {expected_name}, got {pair_name}")));
    }
    let mask = FeatureMask::parse_names(&field(lines, "mask")?).map_err(err)?;
    if !field(lines, "model")?.is_empty() {
        return Err(err("malformed model header"));
    }
    let mut doc = String::new();
    loop {
        let line = lines
            .next()
            .ok_or_else(|| err("unterminated model block"))?;
        if line == "end_model" {
            break;
        }
        doc.push_str(line);
        doc.push('\n');
    }
    let (model, scaler) =
        read_model(&doc).map_err(|e| err(format!("in pair {expected_name}: {e}")))?;
    Ok((PairModel { model, mask }, scaler))
}

/// Parses [`write_bundle`] output.
pub fn read_bundle(text: &str) -> Result<ModelBundle, CascadeError> {
    let mut lines = text.lines();

    let version = field(&mut lines, "avac-bundle")?;
    if version != BUNDLE_FORMAT_VERSION.to_string() {
        return Err(err(format!("unsupported bundle format version {version}")));
    }
    let _tool_version = field(&mut lines, "tool_version")?;
    let environment = Environment::parse(&field(&mut lines, "environment")?).map_err(err)?;
    let layout_version = field(&mut lines, "layout_version")?
        .parse::<u32>()
        .map_err(|_| err("bad layout_version"))?;
    let theta = field(&mut lines, "theta")?
        .parse::<f64>()
        .map_err(|_| err("bad theta"))?;
    let probability_mode = match field(&mut lines, "probability_mode")?.as_str() {
        "platt" => ProbabilityMode::Platt,
        "margin" => ProbabilityMode::Margin,
        other => return Err(err(format!("bad probability_mode {other:?}"))),
    };
    let config_echo = field(&mut lines, "config")?;
    let feature_config: FeatureConfig =
        toml::from_str(&field(&mut lines, "feature_config")?.replace(';', "\n"))
            .map_err(|e| err(format!("bad feature_config: {e}")))?;
    let noise_centroid: Vec<f64> = field(&mut lines, "noise_centroid")?
        .split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|_| err("bad centroid value")))
        .collect::<Result<_, _>>()?;

    let mut pair_models = Vec::with_capacity(PairKey::ALL.len());
    let mut scaler: Option<StandardScaler> = None;
    for key in PairKey::ALL {
        let (pair, pair_scaler) = read_pair(&mut lines, &key.name())?;
        scaler.get_or_insert(pair_scaler);
        pair_models.push(pair);
    }
    let (baseline_split, baseline_scaler) = read_pair(&mut lines, "baseline_split")?;
    let scaler = scaler.unwrap_or(baseline_scaler);
    // All models must speak the bundle's layout.
    for pair in pair_models.iter().chain(std::iter::once(&baseline_split)) {
        if pair.model.layout_version != layout_version
            || pair.mask.layout_version != layout_version
        {
            return Err(err(format!(
                "layout version disagreement: bundle {layout_version}, model {}, mask {}",
                pair.model.layout_version, pair.mask.layout_version
            )));
        }
    }
    if lines.next() != Some("end") {
        return Err(err("missing end marker"));
    }
    if noise_centroid.len() != scaler.dim() {
        return Err(err(format!(
            "centroid has {} values, scaler has {}",
            noise_centroid.len(),
            scaler.dim()
        )));
    }

    Ok(ModelBundle {
        environment,
        layout_version,
        theta,
        probability_mode,
        feature_config,
        scaler,
        noise_centroid,
        pair_models,
        baseline_split,
        config_echo,
    })
}
