//! Per-frame magnitude-spectrum features.

use crate::audio_io::SAMPLE_RATE;
use crate::features::filters::SUBBAND_EDGES_HZ;
use crate::fft;

/// FFT size for 1600-sample analysis frames.
pub const N_FFT: usize = 2048;
/// Number of spectrum bins (DC through Nyquist).
pub const NUM_BINS: usize = N_FFT / 2 + 1;
/// Bin spacing in Hz.
pub const BIN_HZ: f64 = SAMPLE_RATE as f64 / N_FFT as f64;

/// Hann-windowed magnitude spectrum of one analysis frame.
pub fn frame_spectrum(frame: &[f64]) -> Vec<f64> {
    let window = fft::hann_window(frame.len());
    let windowed: Vec<f64> = frame.iter().zip(&window).map(|(&s, &w)| s * w).collect();
    fft::real_magnitudes(&windowed, N_FFT)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralShape {
    pub centroid_hz: f64,
    pub spread_hz: f64,
    pub flux: f64,
    pub kurtosis: f64,
    pub rolloff_hz: f64,
}

impl SpectralShape {
    pub const ZERO: SpectralShape = SpectralShape {
        centroid_hz: 0.0,
        spread_hz: 0.0,
        flux: 0.0,
        kurtosis: 0.0,
        rolloff_hz: 0.0,
    };
}

/// L2-normalizes a magnitude spectrum; a silent spectrum stays all-zero.
pub fn unit_spectrum(mag: &[f64]) -> Vec<f64> {
    let norm = mag.iter().map(|m| m * m).sum::<f64>().sqrt();
    if norm == 0.0 {
        return vec![0.0; mag.len()];
    }
    mag.iter().map(|m| m / norm).collect()
}

/// Shape statistics of one magnitude spectrum, treating it as a weight
/// distribution over bin frequencies. `prev_unit` is the L2-normalized
/// spectrum of the previous frame (all zeros for the first frame).
/// A silent frame yields all zeros.
pub fn spectral_shape(mag: &[f64], prev_unit: &[f64], rolloff_fraction: f64) -> SpectralShape {
    debug_assert_eq!(mag.len(), prev_unit.len());
    let total: f64 = mag.iter().sum();
    if total == 0.0 {
        return SpectralShape::ZERO;
    }

    let mut centroid = 0.0;
    for (k, &p) in mag.iter().enumerate() {
        centroid += k as f64 * BIN_HZ * p;
    }
    centroid /= total;

    let mut m2 = 0.0;
    let mut m4 = 0.0;
    for (k, &p) in mag.iter().enumerate() {
        let d = k as f64 * BIN_HZ - centroid;
        let d2 = d * d;
        m2 += d2 * p;
        m4 += d2 * d2 * p;
    }
    m2 /= total;
    m4 /= total;
    let spread = m2.sqrt();
    let kurtosis = if m2 > 0.0 { m4 / (m2 * m2) } else { 0.0 };

    let unit = unit_spectrum(mag);
    let flux: f64 = unit
        .iter()
        .zip(prev_unit)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();

    let total_energy: f64 = mag.iter().map(|m| m * m).sum();
    let target = rolloff_fraction * total_energy;
    let mut cum = 0.0;
    let mut rolloff = (mag.len() - 1) as f64 * BIN_HZ;
    for (k, &p) in mag.iter().enumerate() {
        cum += p * p;
        if cum >= target {
            rolloff = k as f64 * BIN_HZ;
            break;
        }
    }

    SpectralShape {
        centroid_hz: centroid,
        spread_hz: spread,
        flux,
        kurtosis,
        rolloff_hz: rolloff,
    }
}

/// Spectral energy fractions over the four sub-bands, normalized to sum to 1
/// (all zeros for a silent frame). Band membership is half-open `[lo, hi)`.
pub fn subband_energy(mag: &[f64]) -> [f64; 4] {
    let mut bands = [0.0f64; 4];
    for (k, &m) in mag.iter().enumerate() {
        let f = k as f64 * BIN_HZ;
        for (i, &(lo, hi)) in SUBBAND_EDGES_HZ.iter().enumerate() {
            if f >= lo && f < hi {
                bands[i] += m * m;
                break;
            }
        }
    }
    let total: f64 = bands.iter().sum();
    if total == 0.0 {
        return [0.0; 4];
    }
    for b in bands.iter_mut() {
        *b /= total;
    }
    bands
}
