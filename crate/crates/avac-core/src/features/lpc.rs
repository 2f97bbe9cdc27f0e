//! Linear prediction: autocorrelation method with Levinson-Durbin, plus the
//! LPC-to-cepstrum recursion.

/// Predictor coefficients `a_k` with `x_hat[n] = sum a_k x[n-k]`, so the
/// prediction polynomial is `A(z) = 1 - sum a_k z^-k`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpcResult {
    pub coeffs: Vec<f64>,
    /// RMS of the final prediction residual; 0 for degenerate input.
    pub gain: f64,
}

/// Mean-normalized autocorrelation `r[tau] = (1/N) * sum x[n] x[n+tau]`.
pub fn autocorrelation(x: &[f64], max_lag: usize) -> Vec<f64> {
    let n = x.len();
    (0..=max_lag.min(n.saturating_sub(1)))
        .map(|tau| {
            let mut sum = 0.0;
            for i in 0..n - tau {
                sum += x[i] * x[i + tau];
            }
            sum / n as f64
        })
        .collect()
}

/// Levinson-Durbin recursion on an autocorrelation sequence.
/// Returns zero coefficients and zero gain when `r[0] <= 0`.
pub fn levinson(r: &[f64], order: usize) -> LpcResult {
    assert!(r.len() > order, "need order+1 autocorrelation lags");
    if r[0] <= 0.0 {
        return LpcResult {
            coeffs: vec![0.0; order],
            gain: 0.0,
        };
    }
    // Tiny diagonal loading keeps the recursion strictly minimum-phase on
    // degenerate (pure-tone) frames.
    let r0 = r[0] * (1.0 + 1e-9);
    let mut a = vec![0.0f64; order];
    let mut err = r0;
    for i in 1..=order {
        let mut acc = r[i];
        for j in 1..i {
            acc -= a[j - 1] * r[i - j];
        }
        let mut k = acc / err;
        if !k.is_finite() {
            k = 0.0;
        }
        k = k.clamp(-0.999_999_999, 0.999_999_999);
        let prev = a.clone();
        a[i - 1] = k;
        for j in 1..i {
            a[j - 1] = prev[j - 1] - k * prev[i - j - 1];
        }
        err *= 1.0 - k * k;
    }
    LpcResult {
        coeffs: a,
        gain: err.max(0.0).sqrt(),
    }
}

/// LPC analysis of a sample buffer at the given prediction order.
pub fn lpc(x: &[f64], order: usize) -> LpcResult {
    assert!(order >= 1);
    let r = autocorrelation(x, order);
    if r.len() <= order {
        return LpcResult {
            coeffs: vec![0.0; order],
            gain: 0.0,
        };
    }
    levinson(&r, order)
}

/// Cepstrum of `1/A(z)` from predictor coefficients:
/// `c_n = a_n + sum_{k=1}^{n-1} (k/n) c_k a_{n-k}` for n = 1..=count,
/// with `a_n = 0` past the predictor order.
pub fn lpcc(coeffs: &[f64], _gain: f64, count: usize) -> Vec<f64> {
    let a = |n: usize| -> f64 {
        if n >= 1 && n <= coeffs.len() {
            coeffs[n - 1]
        } else {
            0.0
        }
    };
    let mut c = Vec::with_capacity(count);
    for n in 1..=count {
        let mut acc = a(n);
        for k in 1..n {
            acc += (k as f64 / n as f64) * c[k - 1] * a(n - k);
        }
        c.push(acc);
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn silence_yields_zero_model() {
        let out = lpc(&[0.0; 1600], 12);
        assert_eq!(out.coeffs, vec![0.0; 12]);
        assert_eq!(out.gain, 0.0);
    }

    #[test]
    fn recovers_ar2_process() {
        // x[n] = 0.75 x[n-1] - 0.5 x[n-2] + e[n]
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut x = vec![0.0f64; 16000];
        for n in 2..x.len() {
            let e: f64 = rng.gen_range(-1.0..1.0);
            x[n] = 0.75 * x[n - 1] - 0.5 * x[n - 2] + e;
        }
        let out = lpc(&x, 12);
        assert!((out.coeffs[0] - 0.75).abs() < 0.05, "a1 {}", out.coeffs[0]);
        assert!((out.coeffs[1] + 0.5).abs() < 0.05, "a2 {}", out.coeffs[1]);
        for &a in &out.coeffs[2..] {
            assert!(a.abs() < 0.1);
        }
        assert!(out.gain > 0.0);
    }

    #[test]
    fn white_noise_has_small_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x: Vec<f64> = (0..16000).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let out = lpc(&x, 12);
        for &a in &out.coeffs {
            assert!(a.abs() < 0.1, "coeff {a}");
        }
    }

    #[test]
    fn lpcc_of_zero_lpc_is_zero() {
        assert_eq!(lpcc(&[0.0; 12], 0.0, 12), vec![0.0; 12]);
    }

    #[test]
    fn lpcc_hand_unrolled_single_coefficient() {
        // a1 = 0.5: c1 = 0.5, c2 = 0 + (1/2) c1 a1 = 0.125.
        let c = lpcc(&[0.5], 1.0, 12);
        assert!((c[0] - 0.5).abs() < 1e-15);
        assert!((c[1] - 0.125).abs() < 1e-15);
        // Continuing the recursion: c3 = (1/3) c1 a2 + (2/3) c2 a1 with a2=0.
        assert!((c[2] - (2.0 / 3.0) * 0.125 * 0.5).abs() < 1e-15);
    }

    #[test]
    fn prediction_polynomial_is_minimum_phase_on_noise() {
        // All reflection coefficients bounded by 1 ensures stability; check
        // indirectly by evaluating |A(z)| has no zero outside tight bounds:
        // the LSP module exercises root locations, here just check finiteness.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let x: Vec<f64> = (0..1600).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let out = lpc(&x, 12);
            assert!(out.coeffs.iter().all(|a| a.is_finite()));
            assert!(out.gain.is_finite());
        }
    }
}
