//! Versioned UTF-8 text serialization of trained models.
//!
//! Reals are printed with 17 significant digits so parsing recovers the
//! exact f64 bits.

use thiserror::Error;

use super::{Kernel, StandardScaler, TrainedSVM};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error("model parse error: {0}")]
    Parse(String),
}

/// 17 significant digits: exact round-trip for f64.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_f64(s: &str, what: &str) -> Result<f64, ModelIoError> {
    s.parse::<f64>()
        .map_err(|_| ModelIoError::Parse(format!("bad {what}: {s:?}")))
}

fn join_f64(values: &[f64]) -> String {
    values
        .iter()
        .map(|&v| format_f64(v))
        .collect::<Vec<_>>()
        .join(" ")
}

fn parse_f64_list(s: &str, what: &str) -> Result<Vec<f64>, ModelIoError> {
    s.split_whitespace().map(|tok| parse_f64(tok, what)).collect()
}

/// Renders a model (and the scaler that standardizes its inputs) as text.
pub fn write_model(model: &TrainedSVM, scaler: &StandardScaler) -> String {
    let mut out = String::new();
    out.push_str(&format!("avac-model {MODEL_FORMAT_VERSION}\n"));
    out.push_str(&format!("layout_version {}\n", model.layout_version));
    out.push_str(&format!("label_positive {}\n", model.label_positive));
    out.push_str(&format!("label_negative {}\n", model.label_negative));
    match model.kernel {
        Kernel::Rbf { gamma } => out.push_str(&format!("kernel rbf {}\n", format_f64(gamma))),
        Kernel::Linear => out.push_str("kernel linear\n"),
    }
    out.push_str(&format!("c {}\n", format_f64(model.c)));
    out.push_str(&format!("bias {}\n", format_f64(model.bias)));
    out.push_str(&format!("platt_a {}\n", format_f64(model.platt_a)));
    out.push_str(&format!("platt_b {}\n", format_f64(model.platt_b)));
    out.push_str(&format!("converged {}\n", model.converged));
    out.push_str(&format!("dim {}\n", model.dim()));
    out.push_str(&format!("scaler_means {}\n", join_f64(&scaler.means)));
    out.push_str(&format!("scaler_stds {}\n", join_f64(&scaler.stds)));
    out.push_str(&format!("sv_count {}\n", model.support_vectors.len()));
    out.push_str(&format!("alphas_signed {}\n", join_f64(&model.alphas_signed)));
    for sv in &model.support_vectors {
        out.push_str(&format!("sv {}\n", join_f64(sv)));
    }
    out
}

/// Parses [`write_model`] output.
pub fn read_model(text: &str) -> Result<(TrainedSVM, StandardScaler), ModelIoError> {
    let mut lines = text.lines();
    let mut field = |key: &str| -> Result<String, ModelIoError> {
        let line = lines
            .next()
            .ok_or_else(|| ModelIoError::Parse(format!("missing field {key}")))?;
        line.strip_prefix(key)
            .map(|rest| rest.trim().to_string())
            .ok_or_else(|| ModelIoError::Parse(format!("expected {key}, got {line:?}")))
    };

    let version = field("avac-model")?;
    if version != MODEL_FORMAT_VERSION.to_string() {
        return Err(ModelIoError::Parse(format!(
            "unsupported model format version {version}"
        )));
    }
    let layout_version = field("layout_version")?
        .parse::<u32>()
        .map_err(|_| ModelIoError::Parse("bad layout_version".into()))?;
    let label_positive = field("label_positive")?;
    let label_negative = field("label_negative")?;
    let kernel_line = field("kernel")?;
    let kernel = if kernel_line == "linear" {
        Kernel::Linear
    } else if let Some(g) = kernel_line.strip_prefix("rbf") {
        Kernel::Rbf {
            gamma: parse_f64(g.trim(), "gamma")?,
        }
    } else {
        return Err(ModelIoError::Parse(format!("bad kernel: {kernel_line:?}")));
    };
    let c = parse_f64(&field("c")?, "c")?;
    let bias = parse_f64(&field("bias")?, "bias")?;
    let platt_a = parse_f64(&field("platt_a")?, "platt_a")?;
    let platt_b = parse_f64(&field("platt_b")?, "platt_b")?;
    let converged = match field("converged")?.as_str() {
        "true" => true,
        "false" => false,
        other => return Err(ModelIoError::Parse(format!("bad converged: {other:?}"))),
    };
    let dim = field("dim")?
        .parse::<usize>()
        .map_err(|_| ModelIoError::Parse("bad dim".into()))?;
    let means = parse_f64_list(&field("scaler_means")?, "scaler mean")?;
    let stds = parse_f64_list(&field("scaler_stds")?, "scaler std")?;
    let sv_count = field("sv_count")?
        .parse::<usize>()
        .map_err(|_| ModelIoError::Parse("bad sv_count".into()))?;
    let alphas_signed = parse_f64_list(&field("alphas_signed")?, "alpha")?;
    if alphas_signed.len() != sv_count {
        return Err(ModelIoError::Parse(format!(
            "expected {sv_count} alphas, got {}",
            alphas_signed.len()
        )));
    }
    let mut support_vectors = Vec::with_capacity(sv_count);
    for _ in 0..sv_count {
        let sv = parse_f64_list(&field("sv")?, "support vector")?;
        if sv.len() != dim {
            return Err(ModelIoError::Parse(format!(
                "support vector has {} values, expected {dim}",
                sv.len()
            )));
        }
        support_vectors.push(sv);
    }
    Ok((
        TrainedSVM {
            support_vectors,
            alphas_signed,
            bias,
            kernel,
            c,
            platt_a,
            platt_b,
            label_positive,
            label_negative,
            converged,
            layout_version,
        },
        StandardScaler { means, stds },
    ))
}
