//! Stub bundles whose classifiers emit fixed scores regardless of input,
//! for exercising cascade routing in isolation.

use avac_core::cascade::{Environment, ModelBundle, PairModel};
use avac_core::config::ProbabilityMode;
use avac_core::features::{FeatureConfig, FEATURE_DIM, LAYOUT_VERSION};
use avac_core::selection::FeatureMask;
use avac_core::svm::{Kernel, StandardScaler, TrainedSVM};

/// A model whose decision value is exactly `decision` for every input: two
/// coincident support vectors with opposite signed alphas cancel exactly,
/// leaving only the bias.
pub fn constant_decision_model(decision: f64) -> TrainedSVM {
    TrainedSVM {
        support_vectors: vec![vec![0.0; FEATURE_DIM], vec![0.0; FEATURE_DIM]],
        alphas_signed: vec![1e-6, -1e-6],
        bias: decision,
        kernel: Kernel::Rbf { gamma: 0.01 },
        c: 1.0,
        platt_a: -1.0,
        platt_b: 0.0,
        label_positive: "positive".into(),
        label_negative: "negative".into(),
        converged: true,
        layout_version: LAYOUT_VERSION,
    }
}

/// A model with `predict_probability == p` everywhere (via the logit bias).
pub fn constant_probability_model(p: f64) -> TrainedSVM {
    assert!(p > 0.0 && p < 1.0);
    constant_decision_model((p / (1.0 - p)).ln())
}

fn pair(model: TrainedSVM) -> PairModel {
    PairModel {
        model,
        mask: FeatureMask::full(),
    }
}

/// A bundle that always reports the given stage probabilities and final
/// decision, with an identity scaler.
pub fn stub_bundle(
    env: &str,
    noise_probs: [f64; 3],
    music_probs: [f64; 2],
    final_decision: f64,
    theta: f64,
) -> ModelBundle {
    let scaler = StandardScaler {
        means: vec![0.0; FEATURE_DIM],
        stds: vec![1.0; FEATURE_DIM],
    };
    let pair_models = vec![
        pair(constant_probability_model(noise_probs[0])),
        pair(constant_probability_model(noise_probs[1])),
        pair(constant_probability_model(noise_probs[2])),
        pair(constant_probability_model(music_probs[0])),
        pair(constant_probability_model(music_probs[1])),
        pair(constant_decision_model(final_decision)),
    ];
    ModelBundle {
        environment: Environment::parse(env).unwrap(),
        layout_version: LAYOUT_VERSION,
        theta,
        probability_mode: ProbabilityMode::Platt,
        feature_config: FeatureConfig::default(),
        scaler,
        noise_centroid: vec![0.0; FEATURE_DIM],
        pair_models,
        baseline_split: pair(constant_decision_model(1.0)),
        config_echo: "stub".into(),
    }
}
