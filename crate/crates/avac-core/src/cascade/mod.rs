//! Per-environment model bundles and the two-stage classification cascade.
//!
//! Stage 1 (noise detector) scores the clip against the three `*-vs-noise`
//! classifiers; the clip is noise only when all three agree above theta.
//! Stage 2 (music detector) does the same with the two `*-vs-music`
//! classifiers. Stage 3 is a single binary split between speech and
//! speech+music.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio_io::{AudioClip, AudioError};
use crate::config::ProbabilityMode;
use crate::features::{
    extract_clip_features, ClipFeatureVector, FeatureConfig, FeatureError, LAYOUT_VERSION,
};
use crate::selection::FeatureMask;
use crate::svm::{StandardScaler, SvmError, TrainedSVM};

mod bundle_io;
mod train;

pub use bundle_io::{read_bundle, write_bundle};
pub use train::{train_bundle, train_registry};

#[derive(Debug, Error)]
pub enum CascadeError {
    #[error("missing class {} in training data", .0.name())]
    MissingClass(AudioClass),
    #[error("too few {} clips: need {need}, got {got}", class.name())]
    TooFewSamples {
        class: AudioClass,
        need: usize,
        got: usize,
    },
    #[error("unknown environment {0}")]
    UnknownEnvironment(String),
    #[error("environment detection needs at least 2 environments, registry has {0}")]
    InsufficientCentroids(usize),
    #[error("layout version mismatch: bundle speaks {expected}, input is {got}")]
    LayoutMismatch { expected: u32, got: u32 },
    #[error("training rows span multiple environments: {0} and {1}")]
    MixedEnvironments(String, String),
    #[error("registry must hold at least one bundle")]
    EmptyRegistry,
    #[error("duplicate bundle for environment {0}")]
    DuplicateEnvironment(String),
    #[error("bundle format: {0}")]
    BundleFormat(String),
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Svm(#[from] SvmError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// The four audio classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AudioClass {
    Speech,
    Music,
    SpeechMusic,
    Noise,
}

impl AudioClass {
    pub const ALL: [AudioClass; 4] = [
        AudioClass::Speech,
        AudioClass::Music,
        AudioClass::SpeechMusic,
        AudioClass::Noise,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            AudioClass::Speech => "SPEECH",
            AudioClass::Music => "MUSIC",
            AudioClass::SpeechMusic => "SPEECH_MUSIC",
            AudioClass::Noise => "NOISE",
        }
    }

    pub fn parse(text: &str) -> Option<AudioClass> {
        let t = text.trim().to_ascii_uppercase();
        match t.as_str() {
            "SPEECH" => Some(AudioClass::Speech),
            "MUSIC" => Some(AudioClass::Music),
            "SPEECH_MUSIC" | "SPEECH+MUSIC" => Some(AudioClass::SpeechMusic),
            "NOISE" => Some(AudioClass::Noise),
            _ => None,
        }
    }

    pub fn index(&self) -> usize {
        AudioClass::ALL.iter().position(|c| c == self).unwrap()
    }
}

impl std::fmt::Display for AudioClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Driving-environment identifier. Four environments are built in, but the
/// id set is open: any plain identifier works.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Environment(String);

impl Environment {
    pub const BUILTIN: [&'static str; 4] = ["HIGHWAY", "LOCAL", "CITY", "IDLE"];

    pub fn parse(text: &str) -> Result<Environment, String> {
        let id = text.trim().to_ascii_uppercase();
        if id.is_empty()
            || !id
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_')
            || !id.chars().next().unwrap().is_ascii_alphabetic()
        {
            return Err(format!("invalid environment id {text:?}"));
        }
        Ok(Environment(id))
    }

    pub fn id(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for Environment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// The six one-versus-one classifiers of a bundle, in serialization order.
/// `target` is the model's positive label (what the detector looks for).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairKey {
    pub other: AudioClass,
    pub target: AudioClass,
}

impl PairKey {
    pub const ALL: [PairKey; 6] = [
        PairKey { other: AudioClass::Speech, target: AudioClass::Noise },
        PairKey { other: AudioClass::Music, target: AudioClass::Noise },
        PairKey { other: AudioClass::SpeechMusic, target: AudioClass::Noise },
        PairKey { other: AudioClass::Speech, target: AudioClass::Music },
        PairKey { other: AudioClass::SpeechMusic, target: AudioClass::Music },
        // Stage 3 classifies toward speech on positive decisions.
        PairKey { other: AudioClass::SpeechMusic, target: AudioClass::Speech },
    ];

    /// Bundle key, e.g. `speech:noise` (other class first, target second).
    pub fn name(&self) -> String {
        if *self == PairKey::FINAL {
            // Conventional name: speech is listed first for the final split.
            return "speech:speech_music".into();
        }
        format!(
            "{}:{}",
            self.other.name().to_ascii_lowercase(),
            self.target.name().to_ascii_lowercase()
        )
    }

    pub const FINAL: PairKey = PairKey {
        other: AudioClass::SpeechMusic,
        target: AudioClass::Speech,
    };

    pub fn parse(name: &str) -> Option<PairKey> {
        PairKey::ALL.into_iter().find(|p| p.name() == name)
    }
}

/// One trained classifier plus the feature groups it reads.
#[derive(Debug, Clone, PartialEq)]
pub struct PairModel {
    pub model: TrainedSVM,
    pub mask: FeatureMask,
}

impl PairModel {
    /// Stage score for a standardized full-layout vector.
    fn score(&self, std_vector: &[f64], mode: ProbabilityMode) -> Result<f64, SvmError> {
        let masked = self.mask.apply(std_vector);
        match mode {
            ProbabilityMode::Platt => self.model.predict_probability(&masked),
            ProbabilityMode::Margin => self.model.decision_value(&masked),
        }
    }

    fn decision(&self, std_vector: &[f64]) -> Result<f64, SvmError> {
        self.model.decision_value(&self.mask.apply(std_vector))
    }
}

/// Everything needed to classify clips in one driving environment.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub environment: Environment,
    pub layout_version: u32,
    pub theta: f64,
    pub probability_mode: ProbabilityMode,
    pub feature_config: FeatureConfig,
    pub scaler: StandardScaler,
    /// Mean standardized feature vector of the environment's noise clips.
    pub noise_centroid: Vec<f64>,
    /// The six cascade classifiers, ordered as [`PairKey::ALL`].
    pub pair_models: Vec<PairModel>,
    /// Combined (speech+speech_music) vs (music+noise) model for the
    /// baseline hierarchy.
    pub baseline_split: PairModel,
    /// Effective configuration at training time.
    pub config_echo: String,
}

/// The five detector scores plus the final binary decision. In Platt mode
/// the scores are calibrated posteriors; in margin mode they are raw
/// decision values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageScores {
    /// speech:noise, music:noise, speech_music:noise.
    pub noise: [f64; 3],
    /// speech:music, speech_music:music.
    pub music: [f64; 2],
    /// speech:speech_music decision value; non-negative means speech.
    pub final_decision: f64,
}

/// Decision trail of the baseline (speech / non-speech first) hierarchy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineTrace {
    /// Combined-split decision; non-negative means the speech group.
    pub split_decision: f64,
    /// Branch binary decision actually evaluated.
    pub branch_decision: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationResult {
    pub label: AudioClass,
    pub scores: StageScores,
    pub environment_used: Environment,
    pub elapsed: Duration,
    /// Present only for results of the baseline hierarchy.
    pub baseline: Option<BaselineTrace>,
}

impl ClassificationResult {
    /// One CSV line: `label,p_n1,p_n2,p_n3,p_m1,p_m2,d_final` preceded by
    /// the clip index, as printed by the CLI and the classified-clip log.
    pub fn csv_scores(&self) -> String {
        let s = &self.scores;
        format!(
            "{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            s.noise[0], s.noise[1], s.noise[2], s.music[0], s.music[1], s.final_decision
        )
    }
}

/// Routing of the proposed cascade given stage scores. Ties at exactly theta
/// do not count as exceeded.
pub fn rederive_label(scores: &StageScores, theta: f64) -> AudioClass {
    if scores.noise.iter().all(|&p| p > theta) {
        AudioClass::Noise
    } else if scores.music.iter().all(|&p| p > theta) {
        AudioClass::Music
    } else if scores.final_decision >= 0.0 {
        AudioClass::Speech
    } else {
        AudioClass::SpeechMusic
    }
}

/// Routing of the baseline hierarchy: shared noise stage, then the combined
/// speech/non-speech split, then the branch binary.
pub fn rederive_baseline_label(
    scores: &StageScores,
    trace: &BaselineTrace,
    theta: f64,
) -> AudioClass {
    if scores.noise.iter().all(|&p| p > theta) {
        AudioClass::Noise
    } else if trace.split_decision >= 0.0 {
        if trace.branch_decision >= 0.0 {
            AudioClass::Speech
        } else {
            AudioClass::SpeechMusic
        }
    } else if trace.branch_decision >= 0.0 {
        // music:noise model is noise-positive.
        AudioClass::Noise
    } else {
        AudioClass::Music
    }
}

impl ModelBundle {
    pub fn pair(&self, key: PairKey) -> &PairModel {
        let idx = PairKey::ALL.iter().position(|k| *k == key).unwrap();
        &self.pair_models[idx]
    }

    fn check_layout(&self, fv: &ClipFeatureVector) -> Result<(), CascadeError> {
        if self.layout_version != LAYOUT_VERSION || fv.values.len() != self.scaler.dim() {
            return Err(CascadeError::LayoutMismatch {
                expected: self.layout_version,
                got: LAYOUT_VERSION,
            });
        }
        Ok(())
    }

    /// Stage scores for an already-extracted raw feature vector.
    pub fn stage_scores(&self, fv: &ClipFeatureVector) -> Result<StageScores, CascadeError> {
        self.check_layout(fv)?;
        let std = self.scaler.transform(&fv.values)?;
        let mode = self.probability_mode;
        let score = |key: PairKey| self.pair(key).score(&std, mode);
        Ok(StageScores {
            noise: [
                score(PairKey::ALL[0])?,
                score(PairKey::ALL[1])?,
                score(PairKey::ALL[2])?,
            ],
            music: [score(PairKey::ALL[3])?, score(PairKey::ALL[4])?],
            final_decision: self.pair(PairKey::FINAL).decision(&std)?,
        })
    }

    /// Classifies an extracted feature vector with the proposed cascade.
    pub fn classify_features(
        &self,
        fv: &ClipFeatureVector,
    ) -> Result<(AudioClass, StageScores), CascadeError> {
        let scores = self.stage_scores(fv)?;
        Ok((rederive_label(&scores, self.theta), scores))
    }

    /// Full classification path: feature extraction plus cascade routing.
    pub fn classify_clip(&self, clip: &AudioClip) -> Result<ClassificationResult, CascadeError> {
        let start = Instant::now();
        let fv = extract_clip_features(clip, &self.feature_config)?;
        let (label, scores) = self.classify_features(&fv)?;
        Ok(ClassificationResult {
            label,
            scores,
            environment_used: self.environment.clone(),
            elapsed: start.elapsed(),
            baseline: None,
        })
    }

    /// Baseline hierarchy (speech/non-speech first); the noise stage is the
    /// same as in [`ModelBundle::classify_clip`].
    pub fn baseline_classify_clip(
        &self,
        clip: &AudioClip,
    ) -> Result<ClassificationResult, CascadeError> {
        let start = Instant::now();
        let fv = extract_clip_features(clip, &self.feature_config)?;
        let scores = self.stage_scores(&fv)?;
        let std = self.scaler.transform(&fv.values)?;
        let split_decision = self.baseline_split.decision(&std)?;
        let branch_decision = if split_decision >= 0.0 {
            self.pair(PairKey::FINAL).decision(&std)?
        } else {
            self.pair(PairKey::ALL[1]).decision(&std)? // music:noise
        };
        let trace = BaselineTrace {
            split_decision,
            branch_decision,
        };
        let label = rederive_baseline_label(&scores, &trace, self.theta);
        Ok(ClassificationResult {
            label,
            scores,
            environment_used: self.environment.clone(),
            elapsed: start.elapsed(),
            baseline: Some(trace),
        })
    }
}

/// Immutable map from environment to its model bundle.
#[derive(Debug, Clone)]
pub struct EnvironmentRegistry {
    bundles: BTreeMap<String, ModelBundle>,
}

impl EnvironmentRegistry {
    pub fn new(bundles: Vec<ModelBundle>) -> Result<EnvironmentRegistry, CascadeError> {
        if bundles.is_empty() {
            return Err(CascadeError::EmptyRegistry);
        }
        let mut map = BTreeMap::new();
        for b in bundles {
            let id = b.environment.id().to_string();
            if map.insert(id.clone(), b).is_some() {
                return Err(CascadeError::DuplicateEnvironment(id));
            }
        }
        Ok(EnvironmentRegistry { bundles: map })
    }

    /// Loads every `*.bundle` file in a directory.
    pub fn load_dir(dir: impl AsRef<std::path::Path>) -> Result<EnvironmentRegistry, CascadeError> {
        let mut bundles = Vec::new();
        let mut paths: Vec<_> = std::fs::read_dir(dir)?
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|e| e == "bundle"))
            .collect();
        paths.sort();
        for path in paths {
            let text = std::fs::read_to_string(&path)?;
            bundles.push(read_bundle(&text)?);
        }
        EnvironmentRegistry::new(bundles)
    }

    pub fn get(&self, env: &Environment) -> Result<&ModelBundle, CascadeError> {
        self.bundles
            .get(env.id())
            .ok_or_else(|| CascadeError::UnknownEnvironment(env.id().to_string()))
    }

    pub fn environments(&self) -> Vec<Environment> {
        self.bundles
            .keys()
            .map(|id| Environment(id.clone()))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.bundles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bundles.is_empty()
    }
}

/// Classifies a sequence of clips, routing each to its environment's bundle.
pub fn classify_stream(
    registry: &EnvironmentRegistry,
    clips: &[(AudioClip, Environment)],
) -> Result<Vec<ClassificationResult>, CascadeError> {
    clips
        .iter()
        .map(|(clip, env)| registry.get(env)?.classify_clip(clip))
        .collect()
}

/// Nearest-centroid environment detection over a noise-only clip: each
/// bundle standardizes the query with its own scaler and measures the
/// distance to its stored noise centroid.
pub fn detect_environment(
    registry: &EnvironmentRegistry,
    clip: &AudioClip,
) -> Result<Environment, CascadeError> {
    if registry.len() < 2 {
        return Err(CascadeError::InsufficientCentroids(registry.len()));
    }
    let mut best: Option<(f64, Environment)> = None;
    for env in registry.environments() {
        let bundle = registry.get(&env)?;
        let fv = extract_clip_features(clip, &bundle.feature_config)?;
        bundle.check_layout(&fv)?;
        let std = bundle.scaler.transform(&fv.values)?;
        let dist2: f64 = std
            .iter()
            .zip(&bundle.noise_centroid)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        // Strict < keeps the first (sorted) environment on exact ties.
        if best.as_ref().is_none_or(|(d, _)| dist2 < *d) {
            best = Some((dist2, env));
        }
    }
    Ok(best.expect("registry is non-empty").1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn class_names_round_trip() {
        for class in AudioClass::ALL {
            assert_eq!(AudioClass::parse(class.name()), Some(class));
        }
        assert_eq!(AudioClass::parse("speech+music"), Some(AudioClass::SpeechMusic));
        assert_eq!(AudioClass::parse("humming"), None);
    }

    #[test]
    fn environment_ids_normalize() {
        assert_eq!(Environment::parse("highway").unwrap().id(), "HIGHWAY");
        assert_eq!(Environment::parse(" Tunnel_2 ").unwrap().id(), "TUNNEL_2");
        assert!(Environment::parse("").is_err());
        assert!(Environment::parse("2fast").is_err());
        assert!(Environment::parse("no spaces").is_err());
    }

    #[test]
    fn pair_keys_name_and_parse() {
        let names: Vec<String> = PairKey::ALL.iter().map(|p| p.name()).collect();
        assert_eq!(
            names,
            vec![
                "speech:noise",
                "music:noise",
                "speech_music:noise",
                "speech:music",
                "speech_music:music",
                "speech:speech_music"
            ]
        );
        for key in PairKey::ALL {
            assert_eq!(PairKey::parse(&key.name()), Some(key));
        }
    }

    #[test]
    fn rederivation_follows_detector_routing() {
        let theta = 0.5;
        let mk = |noise: [f64; 3], music: [f64; 2], d: f64| StageScores {
            noise,
            music,
            final_decision: d,
        };
        // All three noise detectors agree.
        assert_eq!(
            rederive_label(&mk([0.9, 0.8, 0.7], [0.1, 0.1], 1.0), theta),
            AudioClass::Noise
        );
        // One noise detector dissents; both music detectors agree.
        assert_eq!(
            rederive_label(&mk([0.9, 0.4, 0.9], [0.6, 0.7], 1.0), theta),
            AudioClass::Music
        );
        // Music detector dissents; the final split goes to speech.
        assert_eq!(
            rederive_label(&mk([0.1, 0.1, 0.1], [0.6, 0.3], 1.0), theta),
            AudioClass::Speech
        );
        assert_eq!(
            rederive_label(&mk([0.1, 0.1, 0.1], [0.6, 0.3], -1.0), theta),
            AudioClass::SpeechMusic
        );
        // Exactly theta does not count as exceeded.
        assert_eq!(
            rederive_label(&mk([0.5, 0.9, 0.9], [0.5, 0.9], 1.0), theta),
            AudioClass::Speech
        );
    }

    #[test]
    fn baseline_rederivation_routes_branches() {
        let theta = 0.5;
        let scores = StageScores {
            noise: [0.1, 0.2, 0.1],
            music: [0.3, 0.3],
            final_decision: 1.0,
        };
        // Split toward speech group, branch toward speech_music.
        let t = BaselineTrace { split_decision: 0.7, branch_decision: -0.4 };
        assert_eq!(rederive_baseline_label(&scores, &t, theta), AudioClass::SpeechMusic);
        // Split toward non-speech, branch toward music.
        let t = BaselineTrace { split_decision: -0.7, branch_decision: -0.9 };
        assert_eq!(rederive_baseline_label(&scores, &t, theta), AudioClass::Music);
        // Noise short-circuits before the split.
        let noisy = StageScores { noise: [0.9, 0.8, 0.6], ..scores };
        let t = BaselineTrace { split_decision: 0.7, branch_decision: 0.4 };
        assert_eq!(rederive_baseline_label(&noisy, &t, theta), AudioClass::Noise);
    }
}
