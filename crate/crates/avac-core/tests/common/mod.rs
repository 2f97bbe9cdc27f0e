//! Shared test support: independent oracles (naive DFT, brute-force QP) and
//! the synthetic corpus generator used by the end-to-end suites.

#![allow(dead_code)]

pub mod corpus;
pub mod stub;

use avac_core::svm::{Kernel, TrainedSVM};

// ---------------------------------------------------------------------------
// Naive DFT oracle (independent of the rustfft-backed implementation)
// ---------------------------------------------------------------------------

/// O(N^2) DFT magnitudes for bins 0..=N/2.
pub fn naive_dft_magnitudes(signal: &[f64]) -> Vec<f64> {
    let n = signal.len();
    (0..=n / 2)
        .map(|k| {
            let mut re = 0.0;
            let mut im = 0.0;
            for (i, &x) in signal.iter().enumerate() {
                let phase = -2.0 * std::f64::consts::PI * k as f64 * i as f64 / n as f64;
                re += x * phase.cos();
                im += x * phase.sin();
            }
            (re * re + im * im).sqrt()
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Brute-force dual QP oracle
// ---------------------------------------------------------------------------

/// Solves a dense linear system by Gaussian elimination with partial
/// pivoting. Returns None when the system is (near-)singular.
fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap()
        })?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            let (pivot_rows, rest) = a.split_at_mut(row);
            let pivot = &pivot_rows[col];
            for (x, p) in rest[0].iter_mut().zip(pivot).skip(col) {
                *x -= factor * p;
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

/// Exact maximum of the C-SVM dual
/// `W(alpha) = sum alpha_i - 1/2 sum alpha_i alpha_j y_i y_j K_ij`
/// subject to `0 <= alpha <= C`, `sum alpha_i y_i = 0`, found by enumerating
/// every active-set assignment (each alpha at 0, at C, or free) and solving
/// the KKT stationarity system for the free block. Exhaustive and exact for
/// small instances; intended for n <= 8.
pub fn brute_force_dual_optimum(x: &[Vec<f64>], y: &[f64], kernel: &Kernel, c: f64) -> f64 {
    let n = x.len();
    assert!(n <= 10, "oracle is exponential; keep instances small");
    let mut k = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in 0..n {
            k[i][j] = kernel.eval(&x[i], &x[j]);
        }
    }
    let q = |i: usize, j: usize| y[i] * y[j] * k[i][j];

    let objective = |alphas: &[f64]| -> f64 {
        let mut w: f64 = alphas.iter().sum();
        for i in 0..n {
            if alphas[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                w -= 0.5 * alphas[i] * alphas[j] * q(i, j);
            }
        }
        w
    };

    let mut best = f64::NEG_INFINITY;
    // States per variable: 0 = at lower bound, 1 = at upper bound, 2 = free.
    let mut assignment = vec![0u8; n];
    loop {
        let free: Vec<usize> = (0..n).filter(|&i| assignment[i] == 2).collect();
        let upper: Vec<usize> = (0..n).filter(|&i| assignment[i] == 1).collect();

        let mut alphas = vec![0.0f64; n];
        for &i in &upper {
            alphas[i] = c;
        }
        let feasible = if free.is_empty() {
            let eq: f64 = upper.iter().map(|&i| y[i] * c).sum();
            eq.abs() < 1e-9
        } else {
            // Unknowns: alpha over the free block plus the equality multiplier.
            let m = free.len();
            let mut mat = vec![vec![0.0f64; m + 1]; m + 1];
            let mut rhs = vec![0.0f64; m + 1];
            for (r, &i) in free.iter().enumerate() {
                for (cidx, &j) in free.iter().enumerate() {
                    mat[r][cidx] = q(i, j);
                }
                mat[r][m] = -y[i];
                rhs[r] = 1.0 - upper.iter().map(|&j| q(i, j) * c).sum::<f64>();
            }
            for (cidx, &j) in free.iter().enumerate() {
                mat[m][cidx] = y[j];
            }
            rhs[m] = -upper.iter().map(|&j| y[j] * c).sum::<f64>();
            match solve_linear(mat, rhs) {
                Some(solution) => {
                    let mut ok = true;
                    for (idx, &i) in free.iter().enumerate() {
                        let a = solution[idx];
                        if !(-1e-9..=c + 1e-9).contains(&a) {
                            ok = false;
                            break;
                        }
                        alphas[i] = a.clamp(0.0, c);
                    }
                    ok
                }
                None => false,
            }
        };
        if feasible {
            best = best.max(objective(&alphas));
        }

        // Next assignment in base-3.
        let mut pos = 0;
        loop {
            if pos == n {
                return best;
            }
            assignment[pos] += 1;
            if assignment[pos] < 3 {
                break;
            }
            assignment[pos] = 0;
            pos += 1;
        }
    }
}

/// Dual objective of a trained model, reconstructed from its support
/// vectors: `W = sum |a_i| - 1/2 sum a_i a_j K(sv_i, sv_j)` where `a` are
/// the signed alphas.
pub fn model_dual_objective(model: &TrainedSVM) -> f64 {
    let a = &model.alphas_signed;
    let sv = &model.support_vectors;
    let mut w: f64 = a.iter().map(|v| v.abs()).sum();
    for i in 0..sv.len() {
        for j in 0..sv.len() {
            w -= 0.5 * a[i] * a[j] * model.kernel.eval(&sv[i], &sv[j]);
        }
    }
    w
}
