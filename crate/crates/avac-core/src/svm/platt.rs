//! Platt scaling: fits `P(y=+1 | d) = 1 / (1 + exp(a*d + b))` to labeled
//! decision values by regularized Newton iteration with the usual target
//! smoothing, following Lin, Weng & Keerthi's robust formulation.

/// Stable sigmoid evaluation of `1 / (1 + exp(a*d + b))`.
pub fn sigmoid(a: f64, b: f64, d: f64) -> f64 {
    let f = a * d + b;
    if f >= 0.0 {
        let e = (-f).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + f.exp())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlattFit {
    pub a: f64,
    pub b: f64,
    /// True when the fit was unusable and the (-1, 0) fallback applies.
    pub degenerate: bool,
}

const FALLBACK: PlattFit = PlattFit {
    a: -1.0,
    b: 0.0,
    degenerate: true,
};

const MAX_ITER: usize = 100;
const MIN_STEP: f64 = 1e-10;
const SIGMA: f64 = 1e-12;

/// Fits the sigmoid on `(decision_value, is_positive)` pairs.
///
/// Requires at least one example of each label; otherwise, or when the fit
/// is non-decreasing in the decision value (a >= 0), returns the fallback
/// marked degenerate.
pub fn fit_sigmoid(values: &[(f64, bool)]) -> PlattFit {
    let num_pos = values.iter().filter(|(_, y)| *y).count();
    let num_neg = values.len() - num_pos;
    if num_pos == 0 || num_neg == 0 {
        return FALLBACK;
    }
    // Smoothed targets.
    let hi = (num_pos as f64 + 1.0) / (num_pos as f64 + 2.0);
    let lo = 1.0 / (num_neg as f64 + 2.0);
    let targets: Vec<f64> = values.iter().map(|(_, y)| if *y { hi } else { lo }).collect();
    let decisions: Vec<f64> = values.iter().map(|(d, _)| *d).collect();

    // Cross-entropy of the smoothed targets at (a, b), written to stay finite
    // for large |f|.
    let objective = |a: f64, b: f64| -> f64 {
        decisions
            .iter()
            .zip(&targets)
            .map(|(&d, &t)| {
                let f = a * d + b;
                if f >= 0.0 {
                    t * f + (1.0 + (-f).exp()).ln()
                } else {
                    (t - 1.0) * f + (1.0 + f.exp()).ln()
                }
            })
            .sum()
    };

    let mut a = 0.0f64;
    let mut b = ((num_neg as f64 + 1.0) / (num_pos as f64 + 1.0)).ln();
    let mut fval = objective(a, b);

    for _ in 0..MAX_ITER {
        // Gradient and Hessian.
        let (mut h11, mut h22) = (SIGMA, SIGMA);
        let mut h21 = 0.0;
        let (mut g1, mut g2) = (0.0, 0.0);
        for (&d, &t) in decisions.iter().zip(&targets) {
            let p = sigmoid(a, b, d);
            let q = 1.0 - p;
            // With f = a*d + b: dF/df = t - p, d2F/df2 = p*q.
            let dee = t - p;
            g1 += d * dee;
            g2 += dee;
            let w = p * q;
            h11 += d * d * w;
            h22 += w;
            h21 += d * w;
        }
        if g1.abs() < 1e-5 && g2.abs() < 1e-5 {
            break;
        }
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(h11 * g2 - h21 * g1) / det;
        let gd = g1 * da + g2 * db;

        let mut step = 1.0;
        let mut stepped = false;
        while step >= MIN_STEP {
            let (na, nb) = (a + step * da, b + step * db);
            let nf = objective(na, nb);
            if nf < fval + 1e-4 * step * gd {
                a = na;
                b = nb;
                fval = nf;
                stepped = true;
                break;
            }
            step /= 2.0;
        }
        if !stepped {
            return FALLBACK;
        }
    }

    if a >= 0.0 || !a.is_finite() || !b.is_finite() {
        return FALLBACK;
    }
    PlattFit {
        a,
        b,
        degenerate: false,
    }
}
