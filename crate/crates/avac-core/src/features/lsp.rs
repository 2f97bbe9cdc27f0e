//! Line spectral pairs.
//!
//! The order-p prediction polynomial `A(z) = 1 - sum a_k z^-k` is split into
//! the symmetric `P(z) = A(z) + z^-(p+1) A(1/z)` and antisymmetric
//! `Q(z) = A(z) - z^-(p+1) A(1/z)` polynomials. After deflating the fixed
//! roots at z = -1 (P) and z = +1 (Q), both reduce to cosine polynomials
//! whose roots on the unit circle interlace. Roots are located by a grid
//! scan in the Chebyshev domain plus bisection refinement.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LspError {
    #[error("root finding failed: located {0} of {1} line spectral frequencies")]
    RootFindingFailed(usize, usize),
}

/// Bisection stops when the bracket is narrower than this (radians).
const REFINE_TOL: f64 = 1e-8;
const BASE_GRID: usize = 2048;

/// Deflated symmetric cosine-polynomial coefficients for P and Q.
/// Each returned vector `c` of length p/2+1 represents
/// `g(w) = c[last] + 2 * sum_i c[i] cos((half-i) w)`.
pub fn lsp_polynomials(coeffs: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let p = coeffs.len();
    assert!(p >= 2 && p.is_multiple_of(2), "LSP order must be even");
    // A(z) as plain polynomial coefficients in z^-1.
    let mut a = vec![0.0f64; p + 1];
    a[0] = 1.0;
    for (k, &c) in coeffs.iter().enumerate() {
        a[k + 1] = -c;
    }
    // P[i] = a[i] + a[p+1-i], Q[i] = a[i] - a[p+1-i], degree p+1.
    let sym: Vec<f64> = (0..=p + 1)
        .map(|i| a.get(i).copied().unwrap_or(0.0) + a.get(p + 1 - i).copied().unwrap_or(0.0))
        .collect();
    let anti: Vec<f64> = (0..=p + 1)
        .map(|i| a.get(i).copied().unwrap_or(0.0) - a.get(p + 1 - i).copied().unwrap_or(0.0))
        .collect();
    // Deflate P by (1 + z^-1), Q by (1 - z^-1); both leave degree p.
    let mut p_def = vec![0.0f64; p + 1];
    p_def[0] = sym[0];
    for i in 1..=p {
        p_def[i] = sym[i] - p_def[i - 1];
    }
    let mut q_def = vec![0.0f64; p + 1];
    q_def[0] = anti[0];
    for i in 1..=p {
        q_def[i] = anti[i] + q_def[i - 1];
    }
    // Keep the first half+1 coefficients of the (symmetric) deflated polys.
    let half = p / 2;
    (p_def[..=half].to_vec(), q_def[..=half].to_vec())
}

/// Evaluates the deflated cosine polynomial at angular frequency `w` using
/// the Chebyshev recurrence on x = cos(w).
fn eval_cheb(c: &[f64], w: f64) -> f64 {
    let half = c.len() - 1;
    let x = w.cos();
    // T_k(x) for k = 0..=half.
    let mut t_prev = 1.0;
    let mut t = x;
    let mut acc = c[half];
    for k in 1..=half {
        acc += 2.0 * c[half - k] * t;
        let next = 2.0 * x * t - t_prev;
        t_prev = t;
        t = next;
    }
    acc
}

fn bisect(c: &[f64], mut lo: f64, mut hi: f64) -> f64 {
    let mut f_lo = eval_cheb(c, lo);
    while hi - lo > REFINE_TOL {
        let mid = 0.5 * (lo + hi);
        let f_mid = eval_cheb(c, mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_lo < 0.0) != (f_mid < 0.0) {
            hi = mid;
        } else {
            lo = mid;
            f_lo = f_mid;
        }
    }
    0.5 * (lo + hi)
}

fn scan_roots(c: &[f64], expected: usize, grid: usize) -> Vec<f64> {
    let mut roots = Vec::with_capacity(expected);
    let step = std::f64::consts::PI / (grid + 1) as f64;
    let mut w_prev = step * 0.5;
    let mut f_prev = eval_cheb(c, w_prev);
    for i in 1..=grid {
        let w = step * (0.5 + i as f64);
        let f = eval_cheb(c, w);
        if f == 0.0 {
            roots.push(w);
        } else if (f_prev < 0.0) != (f < 0.0) {
            roots.push(bisect(c, w_prev, w));
        }
        w_prev = w;
        f_prev = f;
    }
    roots
}

/// Line spectral frequencies of an even-order minimum-phase predictor.
/// Returns strictly increasing values in (0, pi), alternating P/Q roots.
pub fn lsp(coeffs: &[f64]) -> Result<Vec<f64>, LspError> {
    let p = coeffs.len();
    let (p_poly, q_poly) = lsp_polynomials(coeffs);
    let half = p / 2;
    for grid in [BASE_GRID, BASE_GRID * 4, BASE_GRID * 16] {
        let p_roots = scan_roots(&p_poly, half, grid);
        let q_roots = scan_roots(&q_poly, half, grid);
        if p_roots.len() != half || q_roots.len() != half {
            continue;
        }
        // Interlacing: w_P1 < w_Q1 < w_P2 < ... ; a violation means the scan
        // mislocated a root, so fall through to a finer grid.
        let mut merged = Vec::with_capacity(p);
        let mut ok = true;
        for i in 0..half {
            merged.push(p_roots[i]);
            merged.push(q_roots[i]);
        }
        for w in merged.windows(2) {
            if w[0] >= w[1] {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(merged);
        }
    }
    let found = scan_roots(&p_poly, half, BASE_GRID).len()
        + scan_roots(&q_poly, half, BASE_GRID).len();
    Err(LspError::RootFindingFailed(found, p))
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Rebuilds predictor coefficients from interlaced line spectral frequencies.
pub fn lsp_to_lpc(lsfs: &[f64]) -> Vec<f64> {
    let p = lsfs.len();
    assert!(p >= 2 && p.is_multiple_of(2));
    let mut p_poly = vec![1.0, 1.0]; // (1 + z^-1)
    let mut q_poly = vec![1.0, -1.0]; // (1 - z^-1)
    for (i, &w) in lsfs.iter().enumerate() {
        let quad = [1.0, -2.0 * w.cos(), 1.0];
        if i % 2 == 0 {
            p_poly = poly_mul(&p_poly, &quad);
        } else {
            q_poly = poly_mul(&q_poly, &quad);
        }
    }
    // A(z) = (P(z) + Q(z)) / 2; the z^-(p+1) terms cancel.
    (1..=p)
        .map(|k| -(p_poly[k] + q_poly[k]) / 2.0)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Builds predictor coefficients from reflection coefficients; any
    /// |k| < 1 set yields a minimum-phase polynomial.
    pub(crate) fn lpc_from_reflection(ks: &[f64]) -> Vec<f64> {
        let mut a: Vec<f64> = Vec::new();
        for (i, &k) in ks.iter().enumerate() {
            let prev = a.clone();
            a.push(0.0);
            a[i] = k;
            for j in 0..i {
                a[j] = prev[j] - k * prev[i - 1 - j];
            }
        }
        a
    }

    #[test]
    fn trivial_predictor_gives_uniform_lsfs() {
        // A(z) = 1: roots of 1 +/- z^-11 sit at k*pi/11.
        let lsfs = lsp(&[0.0; 10]).unwrap();
        assert_eq!(lsfs.len(), 10);
        for (k, &w) in lsfs.iter().enumerate() {
            let expected = (k + 1) as f64 * std::f64::consts::PI / 11.0;
            assert!((w - expected).abs() < 1e-6, "lsf[{k}] = {w}, want {expected}");
        }
    }

    #[test]
    fn output_is_strictly_increasing() {
        let coeffs = lpc_from_reflection(&[0.5, -0.3, 0.2, -0.1, 0.05, 0.4, -0.2, 0.1, -0.05, 0.02]);
        let lsfs = lsp(&coeffs).unwrap();
        for w in lsfs.windows(2) {
            assert!(w[0] < w[1]);
        }
        assert!(lsfs[0] > 0.0 && lsfs[9] < std::f64::consts::PI);
    }

    #[test]
    fn round_trip_reconstruction() {
        let coeffs = lpc_from_reflection(&[0.6, -0.4, 0.3, -0.2, 0.15, -0.1, 0.08, -0.05, 0.03, -0.01]);
        let lsfs = lsp(&coeffs).unwrap();
        let rebuilt = lsp_to_lpc(&lsfs);
        for (orig, back) in coeffs.iter().zip(&rebuilt) {
            assert!((orig - back).abs() < 1e-6, "{orig} vs {back}");
        }
    }

    #[test]
    fn near_unit_circle_poles_still_resolve() {
        // Strong resonances push LSF pairs close together.
        let coeffs = lpc_from_reflection(&[0.97, -0.95, 0.9, -0.85, 0.8, -0.6, 0.4, -0.3, 0.2, -0.1]);
        let lsfs = lsp(&coeffs).unwrap();
        assert_eq!(lsfs.len(), 10);
        let rebuilt = lsp_to_lpc(&lsfs);
        for (orig, back) in coeffs.iter().zip(&rebuilt) {
            assert!((orig - back).abs() < 1e-5, "{orig} vs {back}");
        }
    }
}
