//! Bundle training: feature extraction, shared scaler, per-pair wrapper
//! selection, SMO training with Platt calibration, and the noise centroid.

use rayon::prelude::*;

use super::{AudioClass, CascadeError, EnvironmentRegistry, ModelBundle, PairKey, PairModel};
use crate::audio_io::load_wav;
use crate::config::{derive_seed, RunConfig};
use crate::features::{extract_clip_features, ClipFeatureVector};
use crate::manifest::{Manifest, ManifestRow};
use crate::selection::wrapper_select;
use crate::svm::{fit_scaler, grid_search, train_calibrated, StandardScaler, TrainedSVM};

/// Minimum clips per class per environment.
pub const MIN_CLIPS_PER_CLASS: usize = 5;

/// Raw (unstandardized) feature vectors grouped by class.
struct ClassVectors {
    by_class: [Vec<Vec<f64>>; 4],
}

impl ClassVectors {
    fn of(&self, class: AudioClass) -> &Vec<Vec<f64>> {
        &self.by_class[class.index()]
    }

    fn merged(&self, classes: &[AudioClass]) -> Vec<Vec<f64>> {
        classes
            .iter()
            .flat_map(|c| self.of(*c).iter().cloned())
            .collect()
    }
}

fn extract_rows(rows: &[&ManifestRow], cfg: &RunConfig) -> Result<ClassVectors, CascadeError> {
    let features: Vec<(AudioClass, ClipFeatureVector)> = rows
        .par_iter()
        .map(|row| {
            let clip = load_wav(&row.path)?;
            let fv = extract_clip_features(&clip, &cfg.features)?;
            Ok((row.label, fv))
        })
        .collect::<Result<_, CascadeError>>()?;
    let mut by_class: [Vec<Vec<f64>>; 4] = Default::default();
    for (label, fv) in features {
        by_class[label.index()].push(fv.values);
    }
    Ok(ClassVectors { by_class })
}

fn train_pair(
    pos_raw: &[Vec<f64>],
    neg_raw: &[Vec<f64>],
    scaler: &StandardScaler,
    cfg: &RunConfig,
    tag: &str,
    label_positive: &str,
    label_negative: &str,
) -> Result<PairModel, CascadeError> {
    let base = cfg.train_config();
    let select_cfg = base.with_seed(derive_seed(cfg.seed, &format!("select:{tag}")));
    let outcome = wrapper_select(pos_raw, neg_raw, &select_cfg, cfg.selection_delta)?;
    let mask = outcome.mask;

    let masked_pos: Vec<Vec<f64>> = pos_raw.iter().map(|v| mask.apply(v)).collect();
    let masked_neg: Vec<Vec<f64>> = neg_raw.iter().map(|v| mask.apply(v)).collect();
    let mut train_cfg = base.with_seed(derive_seed(cfg.seed, &format!("train:{tag}")));
    if cfg.grid_search {
        train_cfg = grid_search(&masked_pos, &masked_neg, &train_cfg, 5)?;
    }

    // Final model: shared bundle scaler, then the mask.
    let std_pos: Vec<Vec<f64>> = pos_raw
        .iter()
        .map(|v| Ok(mask.apply(&scaler.transform(v)?)))
        .collect::<Result<_, CascadeError>>()?;
    let std_neg: Vec<Vec<f64>> = neg_raw
        .iter()
        .map(|v| Ok(mask.apply(&scaler.transform(v)?)))
        .collect::<Result<_, CascadeError>>()?;
    let mut model: TrainedSVM = train_calibrated(&std_pos, &std_neg, &train_cfg)?;
    model.label_positive = label_positive.to_string();
    model.label_negative = label_negative.to_string();
    Ok(PairModel { model, mask })
}

/// Trains one environment's bundle from its manifest rows.
///
/// Requires all four classes with at least [`MIN_CLIPS_PER_CLASS`] clips
/// each; deterministic for a fixed config and seed.
pub fn train_bundle(rows: &[&ManifestRow], cfg: &RunConfig) -> Result<ModelBundle, CascadeError> {
    let environment = match rows.first() {
        Some(row) => row.environment.clone(),
        None => return Err(CascadeError::MissingClass(AudioClass::Speech)),
    };
    for row in rows {
        if row.environment != environment {
            return Err(CascadeError::MixedEnvironments(
                environment.id().to_string(),
                row.environment.id().to_string(),
            ));
        }
    }
    let vectors = extract_rows(rows, cfg)?;
    for class in AudioClass::ALL {
        let got = vectors.of(class).len();
        if got == 0 {
            return Err(CascadeError::MissingClass(class));
        }
        if got < MIN_CLIPS_PER_CLASS {
            return Err(CascadeError::TooFewSamples {
                class,
                need: MIN_CLIPS_PER_CLASS,
                got,
            });
        }
    }

    let all: Vec<Vec<f64>> = AudioClass::ALL
        .iter()
        .flat_map(|c| vectors.of(*c).iter().cloned())
        .collect();
    let scaler = fit_scaler(&all)?;

    // Mean standardized noise vector, persisted for environment detection.
    let noise_std: Vec<Vec<f64>> = vectors
        .of(AudioClass::Noise)
        .iter()
        .map(|v| scaler.transform(v))
        .collect::<Result<_, _>>()?;
    let dim = scaler.dim();
    let mut noise_centroid = vec![0.0f64; dim];
    for v in &noise_std {
        for (c, x) in noise_centroid.iter_mut().zip(v) {
            *c += x;
        }
    }
    for c in noise_centroid.iter_mut() {
        *c /= noise_std.len() as f64;
    }

    // The six cascade pairs, trained independently (and in parallel).
    let pair_models: Vec<PairModel> = PairKey::ALL
        .par_iter()
        .map(|key| {
            train_pair(
                vectors.of(key.target),
                vectors.of(key.other),
                &scaler,
                cfg,
                &format!("{}:{}", environment.id(), key.name()),
                key.target.name(),
                key.other.name(),
            )
        })
        .collect::<Result<_, CascadeError>>()?;

    // Baseline combined split: (speech + speech_music) vs (music + noise).
    let speech_group = vectors.merged(&[AudioClass::Speech, AudioClass::SpeechMusic]);
    let rest_group = vectors.merged(&[AudioClass::Music, AudioClass::Noise]);
    let baseline_split = train_pair(
        &speech_group,
        &rest_group,
        &scaler,
        cfg,
        &format!("{}:baseline_split", environment.id()),
        "SPEECH_GROUP",
        "NONSPEECH_GROUP",
    )?;

    Ok(ModelBundle {
        environment,
        layout_version: cfg.layout_version,
        theta: cfg.theta,
        probability_mode: cfg.probability_mode,
        feature_config: cfg.features.clone(),
        scaler,
        noise_centroid,
        pair_models,
        baseline_split,
        config_echo: cfg.echo_string(),
    })
}

/// Trains a bundle per environment present in the manifest.
pub fn train_registry(
    manifest: &Manifest,
    cfg: &RunConfig,
) -> Result<EnvironmentRegistry, CascadeError> {
    let environments = manifest.environments();
    if environments.is_empty() {
        return Err(CascadeError::EmptyRegistry);
    }
    let bundles: Vec<ModelBundle> = environments
        .iter()
        .map(|env| train_bundle(&manifest.for_environment(env), cfg))
        .collect::<Result<_, _>>()?;
    EnvironmentRegistry::new(bundles)
}
