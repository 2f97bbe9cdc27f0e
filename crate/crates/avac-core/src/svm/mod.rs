//! Binary soft-margin SVM: SMO trainer, RBF kernel, Platt probability
//! calibration, feature standardization, and cross-validation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::LAYOUT_VERSION;

pub mod model_io;
mod cv;
mod platt;
mod smo;

pub use cv::{cross_validate, grid_search};
pub use platt::{fit_sigmoid, PlattFit};

#[derive(Debug, Error)]
pub enum SvmError {
    #[error("training requires examples of both classes")]
    SingleClass,
    #[error("too few samples: need {need}, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("dimension mismatch: model expects {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Kernel with resolved parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    Rbf { gamma: f64 },
    Linear,
}

impl Kernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        match self {
            Kernel::Rbf { gamma } => {
                let dist2: f64 = a
                    .iter()
                    .zip(b)
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum();
                (-gamma * dist2).exp()
            }
            Kernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Rbf,
    Linear,
}

/// Gamma is either fixed or resolved to 1/dimension at training time.
/// Serializes as the string `"auto"` or a plain number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaSetting {
    Auto,
    Fixed(f64),
}

impl Serialize for GammaSetting {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            GammaSetting::Auto => s.serialize_str("auto"),
            GammaSetting::Fixed(g) => s.serialize_f64(*g),
        }
    }
}

impl<'de> Deserialize<'de> for GammaSetting {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct Visitor;
        impl serde::de::Visitor<'_> for Visitor {
            type Value = GammaSetting;
            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("\"auto\" or a positive number")
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<Self::Value, E> {
                if v == "auto" {
                    Ok(GammaSetting::Auto)
                } else {
                    Err(E::custom(format!("expected \"auto\", got {v:?}")))
                }
            }
            fn visit_f64<E: serde::de::Error>(self, v: f64) -> Result<Self::Value, E> {
                if v > 0.0 && v.is_finite() {
                    Ok(GammaSetting::Fixed(v))
                } else {
                    Err(E::custom(format!("gamma must be positive, got {v}")))
                }
            }
            fn visit_i64<E: serde::de::Error>(self, v: i64) -> Result<Self::Value, E> {
                self.visit_f64(v as f64)
            }
            fn visit_u64<E: serde::de::Error>(self, v: u64) -> Result<Self::Value, E> {
                self.visit_f64(v as f64)
            }
        }
        d.deserialize_any(Visitor)
    }
}

/// Trainer hyperparameters. The defaults are recorded in every model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub c: f64,
    pub gamma: GammaSetting,
    pub kernel: KernelKind,
    pub smo_tolerance: f64,
    pub max_passes: usize,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            c: 1.0,
            gamma: GammaSetting::Auto,
            kernel: KernelKind::Rbf,
            smo_tolerance: 1e-3,
            max_passes: 10,
            max_iterations: 100_000,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn resolve_kernel(&self, dim: usize) -> Kernel {
        match self.kernel {
            KernelKind::Linear => Kernel::Linear,
            KernelKind::Rbf => Kernel::Rbf {
                gamma: match self.gamma {
                    GammaSetting::Auto => 1.0 / dim.max(1) as f64,
                    GammaSetting::Fixed(g) => g,
                },
            },
        }
    }

    pub fn with_seed(&self, seed: u64) -> TrainConfig {
        TrainConfig { seed, ..self.clone() }
    }
}

/// Per-dimension z-score parameters, fitted on training data only.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardScaler {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

/// Standard deviations are floored to keep constant columns harmless.
pub const STD_FLOOR: f64 = 1e-12;

pub fn fit_scaler(vectors: &[Vec<f64>]) -> Result<StandardScaler, SvmError> {
    if vectors.len() < 2 {
        return Err(SvmError::TooFewSamples {
            need: 2,
            got: vectors.len(),
        });
    }
    let dim = vectors[0].len();
    let n = vectors.len() as f64;
    let mut means = vec![0.0f64; dim];
    for v in vectors {
        debug_assert_eq!(v.len(), dim);
        for (m, x) in means.iter_mut().zip(v) {
            *m += x;
        }
    }
    for m in means.iter_mut() {
        *m /= n;
    }
    let mut vars = vec![0.0f64; dim];
    for v in vectors {
        for ((var, x), m) in vars.iter_mut().zip(v).zip(&means) {
            let d = x - m;
            *var += d * d;
        }
    }
    let stds = vars.iter().map(|v| (v / n).sqrt().max(STD_FLOOR)).collect();
    Ok(StandardScaler { means, stds })
}

impl StandardScaler {
    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn transform(&self, v: &[f64]) -> Result<Vec<f64>, SvmError> {
        if v.len() != self.dim() {
            return Err(SvmError::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        Ok(v.iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(x, (m, s))| (x - m) / s)
            .collect())
    }
}

pub fn apply_scaler(scaler: &StandardScaler, v: &[f64]) -> Result<Vec<f64>, SvmError> {
    scaler.transform(v)
}

/// A trained binary classifier over standardized vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedSVM {
    pub support_vectors: Vec<Vec<f64>>,
    /// `alpha_i * y_i` per support vector.
    pub alphas_signed: Vec<f64>,
    pub bias: f64,
    pub kernel: Kernel,
    pub c: f64,
    pub platt_a: f64,
    pub platt_b: f64,
    pub label_positive: String,
    pub label_negative: String,
    /// False when the solver hit its iteration cap and returned its best iterate.
    pub converged: bool,
    pub layout_version: u32,
}

impl TrainedSVM {
    pub fn dim(&self) -> usize {
        self.support_vectors.first().map_or(0, |sv| sv.len())
    }

    /// `sum alphas_signed_i K(sv_i, v) + bias`; the sign gives the label.
    pub fn decision_value(&self, v: &[f64]) -> Result<f64, SvmError> {
        if v.len() != self.dim() {
            return Err(SvmError::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        let sum: f64 = self
            .support_vectors
            .iter()
            .zip(&self.alphas_signed)
            .map(|(sv, a)| a * self.kernel.eval(sv, v))
            .sum();
        Ok(sum + self.bias)
    }

    /// Calibrated posterior for the positive label, strictly monotone in the
    /// decision value.
    pub fn predict_probability(&self, v: &[f64]) -> Result<f64, SvmError> {
        Ok(platt::sigmoid(self.platt_a, self.platt_b, self.decision_value(v)?))
    }

    pub fn predicted_label(&self, v: &[f64]) -> Result<&str, SvmError> {
        Ok(if self.decision_value(v)? >= 0.0 {
            &self.label_positive
        } else {
            &self.label_negative
        })
    }
}

/// Trains the C-SVM dual by SMO on standardized vectors. Platt parameters
/// default to (-1, 0); see [`train_calibrated`] for the calibrated pipeline.
pub fn train_smo(
    pos: &[Vec<f64>],
    neg: &[Vec<f64>],
    cfg: &TrainConfig,
) -> Result<TrainedSVM, SvmError> {
    if pos.is_empty() || neg.is_empty() {
        return Err(SvmError::SingleClass);
    }
    let dim = pos[0].len();
    for v in pos.iter().chain(neg) {
        if v.len() != dim {
            return Err(SvmError::DimensionMismatch {
                expected: dim,
                got: v.len(),
            });
        }
    }
    let kernel = cfg.resolve_kernel(dim);
    let x: Vec<&[f64]> = pos.iter().chain(neg).map(|v| v.as_slice()).collect();
    let mut y = vec![1.0f64; pos.len()];
    y.extend(std::iter::repeat_n(-1.0, neg.len()));

    let solution = smo::solve(&x, &y, &kernel, cfg);
    if !solution.converged {
        log::warn!(
            "SMO stopped at the iteration cap ({} pair updates); returning best iterate",
            solution.iterations
        );
    }

    let mut support_vectors = Vec::new();
    let mut alphas_signed = Vec::new();
    for (i, &alpha) in solution.alphas.iter().enumerate() {
        if alpha > 0.0 {
            support_vectors.push(x[i].to_vec());
            alphas_signed.push(alpha * y[i]);
        }
    }
    Ok(TrainedSVM {
        support_vectors,
        alphas_signed,
        bias: solution.bias,
        kernel,
        c: cfg.c,
        platt_a: -1.0,
        platt_b: 0.0,
        label_positive: "positive".into(),
        label_negative: "negative".into(),
        converged: solution.converged,
        layout_version: LAYOUT_VERSION,
    })
}

/// Number of folds used to produce held-out decision values for calibration.
const PLATT_FOLDS: usize = 3;

/// Trains on all data and fits the Platt sigmoid on held-out 3-fold
/// decision values so the posterior is not fitted to resubstitution scores.
pub fn train_calibrated(
    pos: &[Vec<f64>],
    neg: &[Vec<f64>],
    cfg: &TrainConfig,
) -> Result<TrainedSVM, SvmError> {
    let mut model = train_smo(pos, neg, cfg)?;
    let values = cv::held_out_decision_values(pos, neg, cfg, PLATT_FOLDS)?;
    let fit = platt::fit_sigmoid(&values);
    if fit.degenerate {
        log::warn!("degenerate Platt calibration; falling back to a=-1, b=0");
    }
    model.platt_a = fit.a;
    model.platt_b = fit.b;
    Ok(model)
}
