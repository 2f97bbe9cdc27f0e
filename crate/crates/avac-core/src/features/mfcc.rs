//! Mel-frequency cepstral coefficients.
//!
//! 26 triangular mel filters over 0-8000 Hz applied to the 2048-point power
//! spectrum, natural log with a 1e-10 floor, orthonormal DCT-II, and the
//! first 13 coefficients kept.

use crate::features::spectral::{BIN_HZ, NUM_BINS};

/// Coefficients kept per frame.
pub const NUM_COEFFS: usize = 13;
/// Log floor applied to filterbank energies.
pub const LOG_FLOOR: f64 = 1e-10;

pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular filterbank sampled at the spectrum bin frequencies.
/// Returns `num_filters` rows of `NUM_BINS` weights, peak 1.
pub fn mel_filterbank(num_filters: usize, f_max_hz: f64) -> Vec<Vec<f64>> {
    let mel_points: Vec<f64> = (0..num_filters + 2)
        .map(|i| {
            let m = hz_to_mel(0.0)
                + (hz_to_mel(f_max_hz) - hz_to_mel(0.0)) * i as f64 / (num_filters + 1) as f64;
            mel_to_hz(m)
        })
        .collect();
    (0..num_filters)
        .map(|i| {
            let (lo, center, hi) = (mel_points[i], mel_points[i + 1], mel_points[i + 2]);
            (0..NUM_BINS)
                .map(|k| {
                    let f = k as f64 * BIN_HZ;
                    if f <= lo || f >= hi {
                        0.0
                    } else if f <= center {
                        (f - lo) / (center - lo)
                    } else {
                        (hi - f) / (hi - center)
                    }
                })
                .collect()
        })
        .collect()
}

/// Orthonormal DCT-II matrix (rows are basis vectors).
pub fn dct_ii_orthonormal(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|k| {
            let scale = if k == 0 {
                (1.0 / n as f64).sqrt()
            } else {
                (2.0 / n as f64).sqrt()
            };
            (0..n)
                .map(|i| {
                    scale
                        * (std::f64::consts::PI * k as f64 * (2.0 * i as f64 + 1.0)
                            / (2.0 * n as f64))
                            .cos()
                })
                .collect()
        })
        .collect()
}

/// MFCCs from a power spectrum (`NUM_BINS` values).
pub fn mfcc_from_power(power: &[f64], filterbank: &[Vec<f64>]) -> Vec<f64> {
    debug_assert_eq!(power.len(), NUM_BINS);
    let log_energies: Vec<f64> = filterbank
        .iter()
        .map(|filt| {
            let e: f64 = filt.iter().zip(power).map(|(w, p)| w * p).sum();
            e.max(LOG_FLOOR).ln()
        })
        .collect();
    let dct = dct_ii_orthonormal(log_energies.len());
    dct.iter()
        .take(NUM_COEFFS)
        .map(|row| row.iter().zip(&log_energies).map(|(d, e)| d * e).sum())
        .collect()
}

/// MFCCs straight from a 1600-sample frame.
pub fn mfcc(frame: &[f64], num_filters: usize) -> Vec<f64> {
    let mag = crate::features::spectral::frame_spectrum(frame);
    let power: Vec<f64> = mag.iter().map(|m| m * m).collect();
    mfcc_from_power(&power, &mel_filterbank(num_filters, 8000.0))
}
