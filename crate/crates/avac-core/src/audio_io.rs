//! Decode, validate, frame, synthesize, and transform raw audio.
//!
//! Only one audio format exists in this pipeline: RIFF/WAVE, PCM16 LE, mono,
//! 16 kHz. Anything else is rejected instead of resampled so that the DSP
//! contract downstream stays fixed.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::fft;

/// The only sample rate the pipeline accepts.
pub const SAMPLE_RATE: u32 = 16000;
/// Analysis frame: 100 ms, non-overlapping.
pub const FRAME_LEN: usize = 1600;
/// Classification clip: 1 second.
pub const CLIP_LEN: usize = 16000;
/// Largest representable PCM16 amplitude after normalization (32767/32768).
pub const MAX_AMPLITUDE: f32 = 32767.0 / 32768.0;

pub const DEFAULT_SPEC_WIN_MS: f64 = 25.0;
pub const DEFAULT_SPEC_HOP_MS: f64 = 10.0;

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("file not found: {0}")]
    NotFound(PathBuf),
    #[error("unsupported format: {0} (need PCM16 mono 16000 Hz)")]
    UnsupportedFormat(String),
    #[error("corrupt container: {0}")]
    CorruptContainer(String),
    #[error("clip too short: {got} samples, need at least {need}")]
    TooShort { got: usize, need: usize },
    #[error("length mismatch: {0} vs {1} samples")]
    LengthMismatch(usize, usize),
    #[error("silent input: {0} has zero RMS")]
    SilentInput(&'static str),
    #[error("invalid sample at index {0}: {1} outside [-1, 1)")]
    InvalidSample(usize, f32),
    #[error("empty clip")]
    Empty,
    #[error("io error: {0}")]
    Io(#[from] io::Error),
}

/// A mono 16 kHz sample buffer with provenance metadata.
///
/// Immutable after construction; samples are normalized to [-1.0, 1.0).
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f32>,
    sample_rate_hz: u32,
    source_path: Option<PathBuf>,
}

impl AudioClip {
    /// Validates the clip invariants: non-empty, every sample in [-1.0, 1.0).
    pub fn new(samples: Vec<f32>, source_path: Option<PathBuf>) -> Result<Self, AudioError> {
        if samples.is_empty() {
            return Err(AudioError::Empty);
        }
        for (i, &s) in samples.iter().enumerate() {
            if !s.is_finite() || !(-1.0..1.0).contains(&s) {
                return Err(AudioError::InvalidSample(i, s));
            }
        }
        Ok(AudioClip {
            samples,
            sample_rate_hz: SAMPLE_RATE,
            source_path,
        })
    }

    /// Builds a clip from arbitrary finite values, hard-clipping into range.
    /// Returns the clip and the number of samples that had to be clipped.
    pub fn from_unclipped(samples: impl IntoIterator<Item = f32>) -> (Self, usize) {
        let mut clipped = 0usize;
        let samples: Vec<f32> = samples
            .into_iter()
            .map(|s| {
                if (-1.0..=MAX_AMPLITUDE).contains(&s) {
                    s
                } else {
                    clipped += 1;
                    s.clamp(-1.0, MAX_AMPLITUDE)
                }
            })
            .collect();
        assert!(!samples.is_empty(), "clip must hold at least one sample");
        (
            AudioClip {
                samples,
                sample_rate_hz: SAMPLE_RATE,
                source_path: None,
            },
            clipped,
        )
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn source_path(&self) -> Option<&Path> {
        self.source_path.as_deref()
    }

    /// Root mean square over the whole clip, accumulated in f64.
    pub fn rms(&self) -> f64 {
        rms(&self.samples)
    }

    /// Splits the clip into consecutive 1-second sub-clips, discarding the
    /// trailing remainder. Errors if even one second is not available.
    pub fn split_seconds(&self) -> Result<Vec<AudioClip>, AudioError> {
        if self.len() < CLIP_LEN {
            return Err(AudioError::TooShort {
                got: self.len(),
                need: CLIP_LEN,
            });
        }
        Ok(self
            .samples
            .chunks_exact(CLIP_LEN)
            .map(|c| AudioClip {
                samples: c.to_vec(),
                sample_rate_hz: self.sample_rate_hz,
                source_path: self.source_path.clone(),
            })
            .collect())
    }
}

fn rms(samples: &[f32]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let sum: f64 = samples.iter().map(|&s| s as f64 * s as f64).sum();
    (sum / samples.len() as f64).sqrt()
}

/// Contiguous, non-overlapping 100 ms windows of a clip.
///
/// The trailing remainder shorter than one frame is discarded, not padded.
#[derive(Debug, Clone)]
pub struct FrameSequence {
    samples: Vec<f32>,
    num_frames: usize,
}

impl FrameSequence {
    pub fn num_frames(&self) -> usize {
        self.num_frames
    }

    pub fn frame(&self, i: usize) -> &[f32] {
        &self.samples[i * FRAME_LEN..(i + 1) * FRAME_LEN]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f32]> {
        self.samples.chunks_exact(FRAME_LEN)
    }

    /// The covered prefix of the source clip (1600 * num_frames samples).
    pub fn covered_samples(&self) -> &[f32] {
        &self.samples
    }
}

/// Splits a clip into non-overlapping 1600-sample frames (floor rule).
pub fn frame_clip(clip: &AudioClip) -> Result<FrameSequence, AudioError> {
    let n = clip.len() / FRAME_LEN;
    if n == 0 {
        return Err(AudioError::TooShort {
            got: clip.len(),
            need: FRAME_LEN,
        });
    }
    Ok(FrameSequence {
        samples: clip.samples[..n * FRAME_LEN].to_vec(),
        num_frames: n,
    })
}

// ---------------------------------------------------------------------------
// WAV container
// ---------------------------------------------------------------------------

fn read_u16(b: &[u8], at: usize) -> Result<u16, AudioError> {
    b.get(at..at + 2)
        .map(|s| u16::from_le_bytes([s[0], s[1]]))
        .ok_or_else(|| AudioError::CorruptContainer("truncated chunk".into()))
}

fn read_u32(b: &[u8], at: usize) -> Result<u32, AudioError> {
    b.get(at..at + 4)
        .map(|s| u32::from_le_bytes([s[0], s[1], s[2], s[3]]))
        .ok_or_else(|| AudioError::CorruptContainer("truncated chunk".into()))
}

/// Loads a PCM16 mono 16 kHz WAV file and normalizes samples by 1/32768.
pub fn load_wav(path: impl AsRef<Path>) -> Result<AudioClip, AudioError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| {
        if e.kind() == io::ErrorKind::NotFound {
            AudioError::NotFound(path.to_path_buf())
        } else {
            AudioError::Io(e)
        }
    })?;
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(AudioError::CorruptContainer("missing RIFF/WAVE magic".into()));
    }

    let mut fmt: Option<(u16, u16, u32, u16)> = None; // (format, channels, rate, bits)
    let mut data: Option<&[u8]> = None;
    let mut pos = 12usize;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = read_u32(&bytes, pos + 4)? as usize;
        let body_start = pos + 8;
        if body_start + size > bytes.len() {
            return Err(AudioError::CorruptContainer(format!(
                "chunk {} overruns file",
                String::from_utf8_lossy(id)
            )));
        }
        let body = &bytes[body_start..body_start + size];
        match id {
            b"fmt " => {
                if size < 16 {
                    return Err(AudioError::CorruptContainer("fmt chunk too small".into()));
                }
                fmt = Some((
                    read_u16(body, 0)?,
                    read_u16(body, 2)?,
                    read_u32(body, 4)?,
                    read_u16(body, 14)?,
                ));
            }
            b"data" => data = Some(body),
            _ => {} // skip LIST, fact, etc.
        }
        // Chunks are word-aligned.
        pos = body_start + size + (size & 1);
    }

    let (format, channels, rate, bits) =
        fmt.ok_or_else(|| AudioError::CorruptContainer("missing fmt chunk".into()))?;
    if format != 1 || channels != 1 || rate != SAMPLE_RATE || bits != 16 {
        return Err(AudioError::UnsupportedFormat(format!(
            "format={format} channels={channels} rate={rate} bits={bits}"
        )));
    }
    let data = data.ok_or_else(|| AudioError::CorruptContainer("missing data chunk".into()))?;
    if data.len() % 2 != 0 {
        return Err(AudioError::CorruptContainer("odd data chunk length".into()));
    }

    let samples: Vec<f32> = data
        .chunks_exact(2)
        .map(|b| i16::from_le_bytes([b[0], b[1]]) as f32 / 32768.0)
        .collect();
    if samples.is_empty() {
        return Err(AudioError::CorruptContainer("empty data chunk".into()));
    }
    Ok(AudioClip {
        samples,
        sample_rate_hz: SAMPLE_RATE,
        source_path: Some(path.to_path_buf()),
    })
}

/// Writes a clip as PCM16 mono 16 kHz WAV.
pub fn write_wav(path: impl AsRef<Path>, clip: &AudioClip) -> Result<(), AudioError> {
    let data_len = clip.len() * 2;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len as u32).to_le_bytes());
    out.extend_from_slice(b"WAVEfmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // PCM
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&SAMPLE_RATE.to_le_bytes());
    out.extend_from_slice(&(SAMPLE_RATE * 2).to_le_bytes()); // byte rate
    out.extend_from_slice(&2u16.to_le_bytes()); // block align
    out.extend_from_slice(&16u16.to_le_bytes()); // bits per sample
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for &s in clip.samples() {
        let q = (s as f64 * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        out.extend_from_slice(&q.to_le_bytes());
    }
    fs::write(path, out)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Synthesis
// ---------------------------------------------------------------------------

/// `out[n] = clip(a[n] + 10^(gain_b_db/20) * b[n])`, hard-clipped to [-1, 1).
pub fn mix_signals(a: &AudioClip, b: &AudioClip, gain_b_db: f64) -> Result<AudioClip, AudioError> {
    if a.len() != b.len() {
        return Err(AudioError::LengthMismatch(a.len(), b.len()));
    }
    let gain = 10f64.powf(gain_b_db / 20.0);
    let (clip, clipped) = AudioClip::from_unclipped(
        a.samples()
            .iter()
            .zip(b.samples())
            .map(|(&x, &y)| (x as f64 + gain * y as f64) as f32),
    );
    if clipped > 0 {
        log::warn!("mix_signals clipped {clipped} of {} samples", clip.len());
    }
    Ok(clip)
}

/// Scales `noise` to sit `snr_db` below `signal` (by RMS), then sums and clips.
pub fn add_noise_at_snr(
    signal: &AudioClip,
    noise: &AudioClip,
    snr_db: f64,
) -> Result<AudioClip, AudioError> {
    if signal.len() != noise.len() {
        return Err(AudioError::LengthMismatch(signal.len(), noise.len()));
    }
    let signal_rms = signal.rms();
    let noise_rms = noise.rms();
    if signal_rms == 0.0 {
        return Err(AudioError::SilentInput("signal"));
    }
    if noise_rms == 0.0 {
        return Err(AudioError::SilentInput("noise"));
    }
    let scale = signal_rms / (noise_rms * 10f64.powf(snr_db / 20.0));
    let (clip, clipped) = AudioClip::from_unclipped(
        signal
            .samples()
            .iter()
            .zip(noise.samples())
            .map(|(&s, &n)| (s as f64 + scale * n as f64) as f32),
    );
    if clipped > 0 {
        log::warn!("add_noise_at_snr clipped {clipped} of {} samples", clip.len());
    }
    Ok(clip)
}

// ---------------------------------------------------------------------------
// Spectrogram
// ---------------------------------------------------------------------------

/// Short-time magnitude spectrogram: rows are time frames, columns are bins.
#[derive(Debug, Clone)]
pub struct Spectrogram {
    /// frames x bins magnitudes.
    pub magnitudes: Vec<Vec<f64>>,
    /// Bin center frequencies in Hz.
    pub bin_hz: Vec<f64>,
}

impl Spectrogram {
    pub fn num_frames(&self) -> usize {
        self.magnitudes.len()
    }

    /// CSV payload: header row of bin center frequencies, one row per frame.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = self.bin_hz.iter().map(|f| format!("{f}")).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for row in &self.magnitudes {
            let cells: Vec<String> = row.iter().map(|m| format!("{m:.9e}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Hann-windowed STFT magnitudes. FFT size is the next power of two at or
/// above the window length (512 for the default 25 ms window).
pub fn stft_spectrogram(
    clip: &AudioClip,
    win_ms: f64,
    hop_ms: f64,
) -> Result<Spectrogram, AudioError> {
    let win = (win_ms * SAMPLE_RATE as f64 / 1000.0).round() as usize;
    let hop = (hop_ms * SAMPLE_RATE as f64 / 1000.0).round() as usize;
    assert!(win >= 2 && hop >= 1, "window and hop must be positive");
    if clip.len() < win {
        return Err(AudioError::TooShort {
            got: clip.len(),
            need: win,
        });
    }
    let n_fft = win.next_power_of_two();
    let window = fft::hann_window(win);
    let num_frames = (clip.len() - win) / hop + 1;
    let mut magnitudes = Vec::with_capacity(num_frames);
    let mut buf = vec![0.0f64; win];
    for f in 0..num_frames {
        let start = f * hop;
        for (dst, (&s, &w)) in buf
            .iter_mut()
            .zip(clip.samples()[start..start + win].iter().zip(&window))
        {
            *dst = s as f64 * w;
        }
        magnitudes.push(fft::real_magnitudes(&buf, n_fft));
    }
    let bin_hz = (0..n_fft / 2 + 1)
        .map(|k| k as f64 * SAMPLE_RATE as f64 / n_fft as f64)
        .collect();
    Ok(Spectrogram { magnitudes, bin_hz })
}
