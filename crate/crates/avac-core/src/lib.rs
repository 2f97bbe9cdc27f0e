//! Environment-adaptive audio classification for in-vehicle audio.
//!
//! The library classifies 1-second, 16 kHz mono clips into speech, music,
//! speech+music, or noise. Classification runs a two-stage cascade of binary
//! SVMs (a noise detector followed by a music detector), with one model bundle
//! trained per driving environment so that the classifier can be switched to
//! match the current noise profile.
//!
//! Pipeline: [`audio_io`] decodes and frames clips, [`features`] computes a
//! fixed 100-dimensional feature vector per clip, [`svm`] trains and evaluates
//! the binary classifiers, [`selection`] picks per-classifier feature groups,
//! [`cascade`] holds the per-environment bundles and the classification
//! algorithm, and [`eval`] reproduces the accuracy/timing/genre experiments.

pub mod audio_io;
pub mod cascade;
pub mod config;
pub mod eval;
pub mod features;
pub mod manifest;
pub mod selection;
pub mod svm;

mod fft;

pub use audio_io::AudioClip;
pub use cascade::{
    AudioClass, ClassificationResult, Environment, EnvironmentRegistry, ModelBundle,
};
pub use config::RunConfig;
pub use features::ClipFeatureVector;

/// Tool version embedded in every output artifact.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
