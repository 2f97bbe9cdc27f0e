//! Feature extraction against independent oracles: a naive O(N^2) DFT, an
//! FFT-based cepstrum, and randomized property checks.

mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use avac_core::audio_io::{frame_clip, AudioClip, SAMPLE_RATE};
use avac_core::features::{
    self, extract_clip_features, lpc, lsp, spectral, FeatureConfig, FeatureGroupId, FEATURE_DIM,
};

fn sine_clip(freq: f64, amp: f32, len: usize) -> AudioClip {
    let samples: Vec<f32> = (0..len)
        .map(|n| {
            amp * (2.0 * std::f64::consts::PI * freq * n as f64 / SAMPLE_RATE as f64).sin() as f32
        })
        .collect();
    AudioClip::new(samples, None).unwrap()
}

#[test]
fn frame_spectrum_matches_naive_dft() {
    let clip = sine_clip(700.0, 0.6, 1600);
    let frame: Vec<f64> = clip.samples().iter().map(|&s| s as f64).collect();
    let fast = spectral::frame_spectrum(&frame);

    // Same windowing, independent transform.
    let window: Vec<f64> = (0..1600)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / 1600.0).cos())
        .collect();
    let mut padded: Vec<f64> = frame.iter().zip(&window).map(|(s, w)| s * w).collect();
    padded.resize(2048, 0.0);
    let slow = common::naive_dft_magnitudes(&padded);

    assert_eq!(fast.len(), slow.len());
    let peak = slow.iter().cloned().fold(0.0, f64::max);
    for (f, s) in fast.iter().zip(&slow) {
        assert!((f - s).abs() < 1e-6 * peak, "{f} vs {s}");
    }
}

#[test]
fn spectral_centroid_of_tone_from_oracle() {
    // The implementation's centroid must match one computed entirely from
    // the naive DFT path.
    let clip = sine_clip(1000.0, 0.8, 1600);
    let frame: Vec<f64> = clip.samples().iter().map(|&s| s as f64).collect();
    let window: Vec<f64> = (0..1600)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / 1600.0).cos())
        .collect();
    let mut padded: Vec<f64> = frame.iter().zip(&window).map(|(s, w)| s * w).collect();
    padded.resize(2048, 0.0);
    let slow = common::naive_dft_magnitudes(&padded);
    let bin_hz = SAMPLE_RATE as f64 / 2048.0;
    let oracle_centroid: f64 = slow
        .iter()
        .enumerate()
        .map(|(k, p)| k as f64 * bin_hz * p)
        .sum::<f64>()
        / slow.iter().sum::<f64>();

    let mag = spectral::frame_spectrum(&frame);
    let zeros = vec![0.0; mag.len()];
    let shape = spectral::spectral_shape(&mag, &zeros, 0.85);
    assert!((shape.centroid_hz - oracle_centroid).abs() < 1e-6);
    assert!((oracle_centroid - 1000.0).abs() < 16.0);
}

#[test]
fn lpcc_matches_fft_cepstrum_of_synthesis_filter() {
    // Oracle: the cepstrum of 1/A(z) computed on a dense FFT grid equals the
    // recursion output for a minimum-phase A.
    let coeffs = vec![0.6, -0.3, 0.15, -0.08, 0.04, -0.02, 0.01, 0.0, 0.0, 0.0, 0.0, 0.0];
    let c = lpc::lpcc(&coeffs, 1.0, 12);

    let n = 8192usize;
    let mut spectrum_log_re = vec![0.0f64; n];
    let mut spectrum_log_im = vec![0.0f64; n];
    for k in 0..n {
        let w = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
        // A(e^{-jw}) = 1 - sum a_m e^{-jmw}
        let mut re = 1.0;
        let mut im = 0.0;
        for (m, &a) in coeffs.iter().enumerate() {
            let phase = -(m as f64 + 1.0) * w;
            re -= a * phase.cos();
            im -= a * phase.sin();
        }
        // log(1/A) = -log(A)
        let mag = (re * re + im * im).sqrt();
        spectrum_log_re[k] = -mag.ln();
        spectrum_log_im[k] = -im.atan2(re);
    }
    // Inverse DFT (naive) to get the cepstrum coefficients 1..=12.
    for m in 1..=12usize {
        let mut acc = 0.0;
        for k in 0..n {
            let w = 2.0 * std::f64::consts::PI * k as f64 * m as f64 / n as f64;
            acc += spectrum_log_re[k] * w.cos() - spectrum_log_im[k] * w.sin();
        }
        let oracle = acc / n as f64;
        assert!(
            (c[m - 1] - oracle).abs() < 1e-6,
            "c{m}: recursion {} vs cepstrum {oracle}",
            c[m - 1]
        );
    }
}

#[test]
fn nfr_autocorrelation_oracle_for_pure_tone() {
    // A 200 Hz tone has period 80 samples; the normalized autocorrelation
    // peak in the pitch range must be ~1 at that lag and the clip must not
    // count any noise frames.
    let clip = sine_clip(200.0, 0.5, 16000);
    let frames = frame_clip(&clip).unwrap();
    let cfg = FeatureConfig::default();
    let ratios = features::clip_ratio_features(&frames, &cfg);
    assert_eq!(ratios.nfr, 0.0);

    // Direct oracle on one frame at the known period.
    let frame: Vec<f64> = frames.frame(0).iter().map(|&s| s as f64).collect();
    let lag = 80usize;
    let m = frame.len() - lag;
    let num: f64 = (0..m).map(|i| frame[i] * frame[i + lag]).sum();
    let head: f64 = (0..m).map(|i| frame[i] * frame[i]).sum();
    let tail: f64 = (lag..frame.len()).map(|i| frame[i] * frame[i]).sum();
    let ncc = num / (head * tail).sqrt();
    assert!(ncc > 0.999, "oracle ncc at the period = {ncc}");
}

#[test]
fn extraction_layout_group_values_land_where_expected() {
    let cfg = FeatureConfig::default();
    let clip = sine_clip(700.0, 0.6, 16000);
    let v = extract_clip_features(&clip, &cfg).unwrap();
    // Sub-band energy mean for band 1 (500-1000 Hz) dominates.
    let sbe = v.group(FeatureGroupId::SubbandEnergy);
    assert!(sbe[1] > 0.98, "sbe {sbe:?}");
    // Band periodicity in band 1 is near 1 for a pure tone.
    let bp = v.group(FeatureGroupId::BandPeriod);
    assert!(bp[1] > 0.95, "bp {bp:?}");
    // A steady tone has no low-energy or high-zcr frames.
    assert_eq!(v.group(FeatureGroupId::Hzcrr)[0], 0.0);
    assert_eq!(v.group(FeatureGroupId::Lster)[0], 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn feature_vectors_are_always_finite(seed in 0u64..1_000_000, frames in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let len = frames * 1600 + (seed as usize % 1600);
        let samples: Vec<f32> = (0..len).map(|_| rng.gen_range(-0.999..0.999)).collect();
        let clip = AudioClip::new(samples, None).unwrap();
        let v = extract_clip_features(&clip, &FeatureConfig::default()).unwrap();
        prop_assert_eq!(v.values.len(), FEATURE_DIM);
        prop_assert!(v.values.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn lsp_interlaces_for_stable_predictors(ks in prop::collection::vec(-0.95f64..0.95, 10)) {
        // Reflection coefficients inside the unit interval always give a
        // minimum-phase predictor.
        let mut a: Vec<f64> = Vec::new();
        for (i, &k) in ks.iter().enumerate() {
            let prev = a.clone();
            a.push(0.0);
            a[i] = k;
            for j in 0..i {
                a[j] = prev[j] - k * prev[i - 1 - j];
            }
        }
        let lsfs = lsp::lsp(&a).unwrap();
        prop_assert_eq!(lsfs.len(), 10);
        for w in lsfs.windows(2) {
            prop_assert!(w[0] < w[1]);
        }
        prop_assert!(lsfs[0] > 0.0);
        prop_assert!(lsfs[9] < std::f64::consts::PI);
        // Round trip within the scan refinement tolerance.
        let back = lsp::lsp_to_lpc(&lsfs);
        for (orig, rec) in a.iter().zip(&back) {
            prop_assert!((orig - rec).abs() < 1e-5);
        }
    }

    #[test]
    fn subband_fractions_sum_to_one(seed in 0u64..1_000_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let frame: Vec<f64> = (0..1600).map(|_| rng.gen_range(-0.9..0.9)).collect();
        let mag = spectral::frame_spectrum(&frame);
        let bands = spectral::subband_energy(&mag);
        let sum: f64 = bands.iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-9);
    }
}

// The heavier randomized sweep backing the "finite for every valid clip"
// invariant: many short random clips, a few full-length ones.
#[test]
fn fuzz_extraction_stays_finite_at_scale() {
    use rayon::prelude::*;
    let cfg = FeatureConfig::default();
    let trials: usize = if std::env::var("AVAC_FUZZ_FULL").is_ok() { 10_000 } else { 2_000 };
    let failures: usize = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(i as u64);
            let len = if i % 50 == 0 { 16000 } else { 1600 + (i % 3) * 1600 };
            let style = i % 4;
            let samples: Vec<f32> = match style {
                // White noise at random level.
                0 => {
                    let amp = rng.gen_range(1e-6..0.99f32);
                    (0..len).map(|_| rng.gen_range(-amp..amp)).collect()
                }
                // Pure-ish tone with random frequency.
                1 => {
                    let f = rng.gen_range(20.0..7800.0);
                    (0..len)
                        .map(|n| {
                            0.9 * (2.0 * std::f64::consts::PI * f * n as f64 / 16000.0).sin() as f32
                        })
                        .collect()
                }
                // Mostly silence with a few spikes.
                2 => {
                    let mut v = vec![0.0f32; len];
                    for _ in 0..rng.gen_range(0..5) {
                        let at = rng.gen_range(0..len);
                        v[at] = rng.gen_range(-0.999..0.999);
                    }
                    v
                }
                // Constant DC offset.
                _ => vec![rng.gen_range(-0.9..0.9f32); len],
            };
            let clip = AudioClip::new(samples, None).unwrap();
            match extract_clip_features(&clip, &cfg) {
                Ok(v) => usize::from(!v.values.iter().all(|x| x.is_finite())),
                Err(_) => 1,
            }
        })
        .sum();
    assert_eq!(failures, 0, "{failures} of {trials} fuzz clips failed");
}
