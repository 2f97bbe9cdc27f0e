//! Thin wrapper around rustfft with per-thread plan caching.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

thread_local! {
    // Plans are confined to the thread that created them.
    static PLANS: RefCell<HashMap<usize, Arc<dyn Fft<f64>>>> = RefCell::new(HashMap::new());
}

fn plan(len: usize) -> Arc<dyn Fft<f64>> {
    PLANS.with(|cell| {
        cell.borrow_mut()
            .entry(len)
            .or_insert_with(|| FftPlanner::new().plan_fft_forward(len))
            .clone()
    })
}

/// In-place forward FFT.
pub fn forward(buf: &mut [Complex<f64>]) {
    plan(buf.len()).process(buf);
}

/// Magnitude spectrum of a real signal zero-padded to `n_fft`.
/// Returns `n_fft / 2 + 1` magnitudes (DC through Nyquist).
pub fn real_magnitudes(signal: &[f64], n_fft: usize) -> Vec<f64> {
    debug_assert!(signal.len() <= n_fft);
    let mut buf = vec![Complex::new(0.0, 0.0); n_fft];
    for (slot, &s) in buf.iter_mut().zip(signal) {
        slot.re = s;
    }
    forward(&mut buf);
    buf[..n_fft / 2 + 1].iter().map(|c| c.norm()).collect()
}

/// Periodic Hann window of length `n`.
pub fn hann_window(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())
        .collect()
}
