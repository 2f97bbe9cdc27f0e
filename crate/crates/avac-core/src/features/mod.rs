//! The 16 feature groups and the fixed 100-dimensional clip feature vector.
//!
//! Per 1-second clip (10 non-overlapping 100 ms frames): mean and standard
//! deviation over frames of the per-frame features, four per-band periodicity
//! means, and four clip-level ratio features.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio_io::{frame_clip, AudioClip, AudioError, FrameSequence, FRAME_LEN, SAMPLE_RATE};

pub mod filters;
pub mod lpc;
pub mod lsp;
pub mod mfcc;
pub mod spectral;

pub use lpc::{lpc, lpcc, LpcResult};
pub use lsp::{lsp, lsp_to_lpc, LspError};
pub use mfcc::mfcc;
pub use spectral::{spectral_shape, subband_energy, SpectralShape};

/// Total dimensions of the clip feature vector.
pub const FEATURE_DIM: usize = 100;
/// Version of the fixed layout; model files refuse mismatched vectors.
pub const LAYOUT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    Lsp(#[from] LspError),
}

/// Tunable extraction constants. The defaults are the published layout-v1
/// values; prediction orders are pinned by the layout and validated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeatureConfig {
    /// Full-scale RMS below which a frame counts as silent.
    pub silence_rms_threshold: f64,
    /// Normalized autocorrelation peak below which a frame counts as noise.
    pub nfr_autocorr_threshold: f64,
    /// Pitch search range for autocorrelation lags.
    pub pitch_min_hz: f64,
    pub pitch_max_hz: f64,
    /// Cumulative-energy fraction defining the spectral roll-off point.
    pub rolloff_fraction: f64,
    pub mel_filter_count: usize,
    pub lpc_order: usize,
    pub lsp_order: usize,
    /// A frame's ZCR must exceed this multiple of the clip mean for HZCRR.
    pub hzcrr_factor: f64,
    /// A frame's energy must fall below this multiple of the clip mean for LSTER.
    pub lster_factor: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            silence_rms_threshold: 0.005,
            nfr_autocorr_threshold: 0.3,
            pitch_min_hz: 30.0,
            pitch_max_hz: 500.0,
            rolloff_fraction: 0.85,
            mel_filter_count: 26,
            lpc_order: 12,
            lsp_order: 10,
            hzcrr_factor: 1.5,
            lster_factor: 0.5,
        }
    }
}

impl FeatureConfig {
    /// Layout v1 pins the dimensionality-determining orders.
    pub fn validate(&self) -> Result<(), String> {
        if self.lpc_order != 12 {
            return Err(format!("layout v1 requires lpc_order 12, got {}", self.lpc_order));
        }
        if self.lsp_order != 10 {
            return Err(format!("layout v1 requires lsp_order 10, got {}", self.lsp_order));
        }
        if self.mel_filter_count < mfcc::NUM_COEFFS {
            return Err(format!(
                "mel_filter_count must be at least {}, got {}",
                mfcc::NUM_COEFFS,
                self.mel_filter_count
            ));
        }
        for (name, v) in [
            ("silence_rms_threshold", self.silence_rms_threshold),
            ("nfr_autocorr_threshold", self.nfr_autocorr_threshold),
            ("pitch_min_hz", self.pitch_min_hz),
            ("pitch_max_hz", self.pitch_max_hz),
            ("rolloff_fraction", self.rolloff_fraction),
            ("hzcrr_factor", self.hzcrr_factor),
            ("lster_factor", self.lster_factor),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("{name} must be positive, got {v}"));
            }
        }
        if self.pitch_min_hz >= self.pitch_max_hz {
            return Err("pitch_min_hz must be below pitch_max_hz".into());
        }
        Ok(())
    }

    fn lag_range(&self) -> (usize, usize) {
        let lag_min = (SAMPLE_RATE as f64 / self.pitch_max_hz).ceil() as usize;
        let lag_max = ((SAMPLE_RATE as f64 / self.pitch_min_hz).floor() as usize)
            .min(FRAME_LEN - 1);
        (lag_min.max(1), lag_max)
    }
}

/// The 16 feature groups, in the canonical (tie-breaking) order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FeatureGroupId {
    Rms,
    Zcr,
    Hzcrr,
    Lster,
    Nfr,
    Sfr,
    Centroid,
    Spread,
    Flux,
    Kurtosis,
    Rolloff,
    BandPeriod,
    SubbandEnergy,
    Mfcc,
    Lpcc,
    Lsp,
}

impl FeatureGroupId {
    pub const ALL: [FeatureGroupId; 16] = [
        FeatureGroupId::Rms,
        FeatureGroupId::Zcr,
        FeatureGroupId::Hzcrr,
        FeatureGroupId::Lster,
        FeatureGroupId::Nfr,
        FeatureGroupId::Sfr,
        FeatureGroupId::Centroid,
        FeatureGroupId::Spread,
        FeatureGroupId::Flux,
        FeatureGroupId::Kurtosis,
        FeatureGroupId::Rolloff,
        FeatureGroupId::BandPeriod,
        FeatureGroupId::SubbandEnergy,
        FeatureGroupId::Mfcc,
        FeatureGroupId::Lpcc,
        FeatureGroupId::Lsp,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            FeatureGroupId::Rms => "RMS",
            FeatureGroupId::Zcr => "ZCR",
            FeatureGroupId::Hzcrr => "HZCRR",
            FeatureGroupId::Lster => "LSTER",
            FeatureGroupId::Nfr => "NFR",
            FeatureGroupId::Sfr => "SFR",
            FeatureGroupId::Centroid => "CENTROID",
            FeatureGroupId::Spread => "SPREAD",
            FeatureGroupId::Flux => "FLUX",
            FeatureGroupId::Kurtosis => "KURTOSIS",
            FeatureGroupId::Rolloff => "ROLLOFF",
            FeatureGroupId::BandPeriod => "BAND_PERIOD",
            FeatureGroupId::SubbandEnergy => "SUBBAND_ENERGY",
            FeatureGroupId::Mfcc => "MFCC",
            FeatureGroupId::Lpcc => "LPCC",
            FeatureGroupId::Lsp => "LSP",
        }
    }

    pub fn parse(name: &str) -> Option<FeatureGroupId> {
        FeatureGroupId::ALL.iter().copied().find(|g| g.name() == name)
    }

    /// Positions of this group's values in the 100-dimensional layout.
    pub fn layout_indices(&self) -> Vec<usize> {
        let range = |start: usize, len: usize| (start..start + len).collect::<Vec<_>>();
        match self {
            FeatureGroupId::Rms => range(0, 2),
            FeatureGroupId::Zcr => range(2, 2),
            FeatureGroupId::Centroid => range(4, 2),
            FeatureGroupId::Spread => range(6, 2),
            FeatureGroupId::Flux => range(8, 2),
            FeatureGroupId::Kurtosis => range(10, 2),
            FeatureGroupId::Rolloff => range(12, 2),
            FeatureGroupId::SubbandEnergy => range(14, 8),
            FeatureGroupId::Mfcc => range(22, 26),
            FeatureGroupId::Lpcc => range(48, 24),
            FeatureGroupId::Lsp => range(72, 20),
            FeatureGroupId::BandPeriod => range(92, 4),
            FeatureGroupId::Hzcrr => vec![96],
            FeatureGroupId::Lster => vec![97],
            FeatureGroupId::Nfr => vec![98],
            FeatureGroupId::Sfr => vec![99],
        }
    }
}

/// Human-readable name per layout position, used as CSV headers.
pub fn layout_descriptors() -> Vec<String> {
    let mut names = vec![String::new(); FEATURE_DIM];
    let scalar_pairs = [
        (FeatureGroupId::Rms, "rms"),
        (FeatureGroupId::Zcr, "zcr"),
        (FeatureGroupId::Centroid, "centroid"),
        (FeatureGroupId::Spread, "spread"),
        (FeatureGroupId::Flux, "flux"),
        (FeatureGroupId::Kurtosis, "kurtosis"),
        (FeatureGroupId::Rolloff, "rolloff"),
    ];
    for (group, stem) in scalar_pairs {
        let idx = group.layout_indices();
        names[idx[0]] = format!("{stem}_mean");
        names[idx[1]] = format!("{stem}_std");
    }
    let vector_groups = [
        (FeatureGroupId::SubbandEnergy, "sbe", 4, 0),
        (FeatureGroupId::Mfcc, "mfcc", 13, 0),
        (FeatureGroupId::Lpcc, "lpcc", 12, 1),
        (FeatureGroupId::Lsp, "lsp", 10, 0),
    ];
    for (group, stem, n, base) in vector_groups {
        let idx = group.layout_indices();
        for i in 0..n {
            names[idx[i]] = format!("{stem}{:02}_mean", i + base);
            names[idx[n + i]] = format!("{stem}{:02}_std", i + base);
        }
    }
    for (i, &pos) in FeatureGroupId::BandPeriod.layout_indices().iter().enumerate() {
        names[pos] = format!("bp{i}_mean");
    }
    names[96] = "hzcrr".into();
    names[97] = "lster".into();
    names[98] = "nfr".into();
    names[99] = "sfr".into();
    names
}

/// Fixed-layout numeric summary of one clip.
#[derive(Debug, Clone, PartialEq)]
pub struct ClipFeatureVector {
    pub values: Vec<f64>,
}

impl ClipFeatureVector {
    pub fn group(&self, id: FeatureGroupId) -> Vec<f64> {
        id.layout_indices().iter().map(|&i| self.values[i]).collect()
    }
}

// ---------------------------------------------------------------------------
// Per-frame primitives
// ---------------------------------------------------------------------------

/// Root mean square of one frame.
pub fn frame_rms(frame: &[f64]) -> f64 {
    if frame.is_empty() {
        return 0.0;
    }
    (frame.iter().map(|s| s * s).sum::<f64>() / frame.len() as f64).sqrt()
}

/// Zero-crossing rate: sign changes per sample transition, zero counted as
/// non-negative.
pub fn frame_zcr(frame: &[f64]) -> f64 {
    assert!(frame.len() >= 2);
    let changes = frame
        .windows(2)
        .filter(|w| (w[0] >= 0.0) != (w[1] >= 0.0))
        .count();
    changes as f64 / (frame.len() - 1) as f64
}

/// Largest normalized autocorrelation over the pitch lag range; 0 if the
/// frame has no energy. Numerator and window norms both shrink with lag,
/// so a perfectly periodic frame scores ~1 regardless of lag.
fn max_pitch_autocorr(frame: &[f64], lag_min: usize, lag_max: usize) -> f64 {
    let n = frame.len();
    // Prefix sums of squared samples for O(1) window norms.
    let mut sq_prefix = vec![0.0f64; n + 1];
    for (i, &s) in frame.iter().enumerate() {
        sq_prefix[i + 1] = sq_prefix[i] + s * s;
    }
    let mut best = 0.0f64;
    for lag in lag_min..=lag_max.min(n - 1) {
        let m = n - lag;
        let mut num = 0.0;
        for i in 0..m {
            num += frame[i] * frame[i + lag];
        }
        let head = sq_prefix[m];
        let tail = sq_prefix[n] - sq_prefix[lag];
        let denom = (head * tail).sqrt();
        if denom > 0.0 {
            best = best.max(num / denom);
        }
    }
    best
}

/// Clip-level ratio features over all frames.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioFeatures {
    pub hzcrr: f64,
    pub lster: f64,
    pub nfr: f64,
    pub sfr: f64,
}

pub fn clip_ratio_features(frames: &FrameSequence, cfg: &FeatureConfig) -> RatioFeatures {
    let n = frames.num_frames();
    assert!(n >= 1);
    let (lag_min, lag_max) = cfg.lag_range();
    let mut zcrs = Vec::with_capacity(n);
    let mut energies = Vec::with_capacity(n);
    let mut silent = 0usize;
    let mut noise_frames = 0usize;
    for frame in frames.iter() {
        let f: Vec<f64> = frame.iter().map(|&s| s as f64).collect();
        let rms = frame_rms(&f);
        zcrs.push(frame_zcr(&f));
        energies.push(rms * rms);
        if rms < cfg.silence_rms_threshold {
            silent += 1;
        }
        if max_pitch_autocorr(&f, lag_min, lag_max) < cfg.nfr_autocorr_threshold {
            noise_frames += 1;
        }
    }
    let mean_zcr = zcrs.iter().sum::<f64>() / n as f64;
    let mean_energy = energies.iter().sum::<f64>() / n as f64;
    let frac = |count: usize| count as f64 / n as f64;
    RatioFeatures {
        hzcrr: frac(zcrs.iter().filter(|&&z| z > cfg.hzcrr_factor * mean_zcr).count()),
        lster: frac(
            energies
                .iter()
                .filter(|&&e| e < cfg.lster_factor * mean_energy)
                .count(),
        ),
        nfr: frac(noise_frames),
        sfr: frac(silent),
    }
}

/// Per-band periodicity: the maximal normalized cross-correlation between
/// each frame and its predecessor after band-limiting, averaged over frame
/// pairs. Requires at least two frames; silence scores 0.
pub fn band_periodicity(frames: &FrameSequence, cfg: &FeatureConfig) -> [f64; 4] {
    let n = frames.num_frames();
    if n < 2 {
        return [0.0; 4];
    }
    let (lag_min, lag_max) = cfg.lag_range();
    let signal: Vec<f64> = frames.covered_samples().iter().map(|&s| s as f64).collect();
    let mut out = [0.0f64; 4];
    for (band, filter) in filters::design_subband_filters(SAMPLE_RATE as f64)
        .iter()
        .enumerate()
    {
        let filtered = filter.apply(&signal);
        let mut sq_prefix = vec![0.0f64; filtered.len() + 1];
        for (i, &s) in filtered.iter().enumerate() {
            sq_prefix[i + 1] = sq_prefix[i] + s * s;
        }
        let mut acc = 0.0;
        for t in 1..n {
            let cur_start = t * FRAME_LEN;
            let cur = &filtered[cur_start..cur_start + FRAME_LEN];
            let cur_norm = sq_prefix[cur_start + FRAME_LEN] - sq_prefix[cur_start];
            let mut best = 0.0f64;
            for lag in lag_min..=lag_max {
                let hist_start = cur_start - lag;
                let hist = &filtered[hist_start..hist_start + FRAME_LEN];
                let mut num = 0.0;
                for i in 0..FRAME_LEN {
                    num += cur[i] * hist[i];
                }
                let hist_norm = sq_prefix[hist_start + FRAME_LEN] - sq_prefix[hist_start];
                let denom = (cur_norm * hist_norm).sqrt();
                if denom > 0.0 {
                    best = best.max(num / denom);
                }
            }
            acc += best.clamp(0.0, 1.0);
        }
        out[band] = acc / (n - 1) as f64;
    }
    out
}

// ---------------------------------------------------------------------------
// Clip assembly
// ---------------------------------------------------------------------------

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Frames the clip, computes all 16 groups, and assembles the fixed layout.
pub fn extract_clip_features(
    clip: &AudioClip,
    cfg: &FeatureConfig,
) -> Result<ClipFeatureVector, FeatureError> {
    let frames = frame_clip(clip)?;
    let n = frames.num_frames();
    let filterbank = mfcc::mel_filterbank(cfg.mel_filter_count, 8000.0);

    // Per-frame channel traces.
    let mut rms_t = Vec::with_capacity(n);
    let mut zcr_t = Vec::with_capacity(n);
    let mut shape_t: Vec<SpectralShape> = Vec::with_capacity(n);
    let mut sbe_t: Vec<[f64; 4]> = Vec::with_capacity(n);
    let mut mfcc_t: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut lpcc_t: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut lsp_t: Vec<Vec<f64>> = Vec::with_capacity(n);

    let mut prev_unit = vec![0.0f64; spectral::NUM_BINS];
    for frame in frames.iter() {
        let f: Vec<f64> = frame.iter().map(|&s| s as f64).collect();
        rms_t.push(frame_rms(&f));
        zcr_t.push(frame_zcr(&f));

        let mag = spectral::frame_spectrum(&f);
        shape_t.push(spectral_shape(&mag, &prev_unit, cfg.rolloff_fraction));
        sbe_t.push(subband_energy(&mag));
        let power: Vec<f64> = mag.iter().map(|m| m * m).collect();
        mfcc_t.push(mfcc::mfcc_from_power(&power, &filterbank));
        prev_unit = spectral::unit_spectrum(&mag);

        let fit = lpc::lpc(&f, cfg.lpc_order);
        lpcc_t.push(lpc::lpcc(&fit.coeffs, fit.gain, cfg.lpc_order));
        // The LSP order is lower; the Levinson recursion at that order is
        // minimum-phase by construction, unlike a truncated order-12 fit.
        let low = lpc::lpc(&f, cfg.lsp_order);
        lsp_t.push(lsp::lsp(&low.coeffs)?);
    }

    let ratios = clip_ratio_features(&frames, cfg);
    let bp = band_periodicity(&frames, cfg);

    let mut values = vec![0.0f64; FEATURE_DIM];
    let put_pair = |values: &mut Vec<f64>, group: FeatureGroupId, trace: &[f64]| {
        let idx = group.layout_indices();
        let (mean, std) = mean_std(trace);
        values[idx[0]] = mean;
        values[idx[1]] = std;
    };
    put_pair(&mut values, FeatureGroupId::Rms, &rms_t);
    put_pair(&mut values, FeatureGroupId::Zcr, &zcr_t);
    let shape_channel = |get: fn(&SpectralShape) -> f64| -> Vec<f64> {
        shape_t.iter().map(get).collect()
    };
    put_pair(&mut values, FeatureGroupId::Centroid, &shape_channel(|s| s.centroid_hz));
    put_pair(&mut values, FeatureGroupId::Spread, &shape_channel(|s| s.spread_hz));
    put_pair(&mut values, FeatureGroupId::Flux, &shape_channel(|s| s.flux));
    put_pair(&mut values, FeatureGroupId::Kurtosis, &shape_channel(|s| s.kurtosis));
    put_pair(&mut values, FeatureGroupId::Rolloff, &shape_channel(|s| s.rolloff_hz));

    let put_block = |values: &mut Vec<f64>, group: FeatureGroupId, traces: &[Vec<f64>], width: usize| {
        let idx = group.layout_indices();
        debug_assert_eq!(idx.len(), 2 * width);
        for c in 0..width {
            let channel: Vec<f64> = traces.iter().map(|t| t[c]).collect();
            let (mean, std) = mean_std(&channel);
            values[idx[c]] = mean;
            values[idx[width + c]] = std;
        }
    };
    let sbe_rows: Vec<Vec<f64>> = sbe_t.iter().map(|b| b.to_vec()).collect();
    put_block(&mut values, FeatureGroupId::SubbandEnergy, &sbe_rows, 4);
    put_block(&mut values, FeatureGroupId::Mfcc, &mfcc_t, 13);
    put_block(&mut values, FeatureGroupId::Lpcc, &lpcc_t, 12);
    put_block(&mut values, FeatureGroupId::Lsp, &lsp_t, 10);

    for (i, &pos) in FeatureGroupId::BandPeriod.layout_indices().iter().enumerate() {
        values[pos] = bp[i];
    }
    values[96] = ratios.hzcrr;
    values[97] = ratios.lster;
    values[98] = ratios.nfr;
    values[99] = ratios.sfr;

    Ok(ClipFeatureVector { values })
}
