//! IIR bandpass filters for the sub-band features.
//!
//! Butterworth designs built as second-order sections via the bilinear
//! transform. The four analysis sub-bands are 0-500, 500-1000, 1000-2000,
//! and 2000-4000 Hz, each a 6th-order filter.

use rustfft::num_complex::Complex;

/// One normalized second-order section (a0 = 1).
#[derive(Debug, Clone, Copy)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Biquad {
    fn response(&self, z_inv: Complex<f64>) -> Complex<f64> {
        let num = Complex::new(self.b0, 0.0) + z_inv * (self.b1 + self.b2 * z_inv);
        let den = Complex::new(1.0, 0.0) + z_inv * (self.a1 + self.a2 * z_inv);
        num / den
    }
}

/// Cascade of biquads with a scalar output gain.
#[derive(Debug, Clone)]
pub struct SosFilter {
    pub sections: Vec<Biquad>,
    pub gain: f64,
}

impl SosFilter {
    /// One-pass causal filtering from zero initial state (direct form II
    /// transposed per section).
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y: Vec<f64> = x.to_vec();
        for s in &self.sections {
            let mut z1 = 0.0;
            let mut z2 = 0.0;
            for v in y.iter_mut() {
                let input = *v;
                let out = s.b0 * input + z1;
                z1 = s.b1 * input - s.a1 * out + z2;
                z2 = s.b2 * input - s.a2 * out;
                *v = out;
            }
        }
        for v in y.iter_mut() {
            *v *= self.gain;
        }
        y
    }

    /// Magnitude response at `freq_hz` for sample rate `fs`.
    pub fn magnitude_at(&self, freq_hz: f64, fs: f64) -> f64 {
        let w = 2.0 * std::f64::consts::PI * freq_hz / fs;
        let z_inv = Complex::from_polar(1.0, -w);
        let h: Complex<f64> = self
            .sections
            .iter()
            .map(|s| s.response(z_inv))
            .product::<Complex<f64>>()
            * self.gain;
        h.norm()
    }
}

/// Analog Butterworth prototype poles for unit cutoff (left half plane).
fn prototype_poles(order: usize) -> Vec<Complex<f64>> {
    (0..order)
        .map(|k| {
            let theta = std::f64::consts::PI * (2.0 * k as f64 + order as f64 + 1.0)
                / (2.0 * order as f64);
            Complex::from_polar(1.0, theta)
        })
        .collect()
}

fn prewarp(f: f64, fs: f64) -> f64 {
    2.0 * fs * (std::f64::consts::PI * f / fs).tan()
}

fn bilinear_pole(s: Complex<f64>, fs: f64) -> Complex<f64> {
    let two_fs = Complex::new(2.0 * fs, 0.0);
    (two_fs + s) / (two_fs - s)
}

/// Groups digital poles into conjugate-pair biquad denominators.
/// Only even pole counts occur here (all-complex designs).
fn pair_poles(poles: &[Complex<f64>]) -> Vec<(f64, f64)> {
    let mut upper: Vec<Complex<f64>> = poles.iter().copied().filter(|p| p.im > 0.0).collect();
    assert_eq!(
        upper.len() * 2,
        poles.len(),
        "expected conjugate-only pole set"
    );
    upper.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
    upper.iter().map(|p| (-2.0 * p.re, p.norm_sqr())).collect()
}

/// 6th-order (or any even-order) digital Butterworth lowpass.
pub fn butter_lowpass(order: usize, fc: f64, fs: f64) -> SosFilter {
    assert!(order >= 2 && order.is_multiple_of(2));
    let wc = prewarp(fc, fs);
    let digital: Vec<Complex<f64>> = prototype_poles(order)
        .into_iter()
        .map(|p| bilinear_pole(p * wc, fs))
        .collect();
    let sections = pair_poles(&digital)
        .into_iter()
        .map(|(a1, a2)| Biquad {
            b0: 1.0,
            b1: 2.0,
            b2: 1.0,
            a1,
            a2,
        })
        .collect();
    let mut filter = SosFilter { sections, gain: 1.0 };
    filter.gain = 1.0 / filter.magnitude_at(0.0, fs);
    filter
}

/// Even-order digital Butterworth bandpass (`order` counts bandpass poles,
/// so the underlying lowpass prototype has `order / 2`).
pub fn butter_bandpass(order: usize, f_lo: f64, f_hi: f64, fs: f64) -> SosFilter {
    assert!(order >= 2 && order.is_multiple_of(2));
    assert!(0.0 < f_lo && f_lo < f_hi && f_hi < fs / 2.0);
    let w1 = prewarp(f_lo, fs);
    let w2 = prewarp(f_hi, fs);
    let bw = w2 - w1;
    let w0 = (w1 * w2).sqrt();

    // Lowpass-to-bandpass: each prototype pole p yields the two roots of
    // s^2 - p*bw*s + w0^2 = 0.
    let mut analog = Vec::with_capacity(order);
    for p in prototype_poles(order / 2) {
        let half = p * (bw / 2.0);
        let disc = (half * half - Complex::new(w0 * w0, 0.0)).sqrt();
        analog.push(half + disc);
        analog.push(half - disc);
    }
    let digital: Vec<Complex<f64>> = analog.into_iter().map(|s| bilinear_pole(s, fs)).collect();
    // Zeros: order/2 at z=+1 and order/2 at z=-1; one of each per section.
    let sections = pair_poles(&digital)
        .into_iter()
        .map(|(a1, a2)| Biquad {
            b0: 1.0,
            b1: 0.0,
            b2: -1.0,
            a1,
            a2,
        })
        .collect();
    let mut filter = SosFilter { sections, gain: 1.0 };
    // Unity gain at the (unwarped) analog center frequency.
    let f_center = (w0 / (2.0 * fs)).atan() * fs / std::f64::consts::PI;
    filter.gain = 1.0 / filter.magnitude_at(f_center, fs);
    filter
}

/// Sub-band edges in Hz used by band periodicity and sub-band energy.
pub const SUBBAND_EDGES_HZ: [(f64, f64); 4] =
    [(0.0, 500.0), (500.0, 1000.0), (1000.0, 2000.0), (2000.0, 4000.0)];

/// The four 6th-order analysis filters (lowpass for the DC-anchored band).
pub fn design_subband_filters(fs: f64) -> [SosFilter; 4] {
    [
        butter_lowpass(6, 500.0, fs),
        butter_bandpass(6, 500.0, 1000.0, fs),
        butter_bandpass(6, 1000.0, 2000.0, fs),
        butter_bandpass(6, 2000.0, 4000.0, fs),
    ]
}
