//! Stratified k-fold cross-validation over raw (unstandardized) vectors.
//! The scaler is refit on each fold's training split so held-out scores
//! never leak test statistics.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{fit_scaler, train_smo, GammaSetting, SvmError, TrainConfig};

/// Shuffles each class with the seed and deals indices round-robin into k folds.
fn stratified_folds(
    n_pos: usize,
    n_neg: usize,
    k: usize,
    seed: u64,
) -> Vec<(Vec<usize>, Vec<usize>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pos_idx: Vec<usize> = (0..n_pos).collect();
    let mut neg_idx: Vec<usize> = (0..n_neg).collect();
    pos_idx.shuffle(&mut rng);
    neg_idx.shuffle(&mut rng);
    let mut folds = vec![(Vec::new(), Vec::new()); k];
    for (i, &p) in pos_idx.iter().enumerate() {
        folds[i % k].0.push(p);
    }
    for (i, &n) in neg_idx.iter().enumerate() {
        folds[i % k].1.push(n);
    }
    folds
}

/// Mean held-out accuracy over stratified k folds; deterministic under seed.
pub fn cross_validate(
    pos: &[Vec<f64>],
    neg: &[Vec<f64>],
    cfg: &TrainConfig,
    k: usize,
) -> Result<f64, SvmError> {
    assert!(k >= 2);
    let short = pos.len().min(neg.len());
    if short < k {
        return Err(SvmError::TooFewSamples { need: k, got: short });
    }
    let folds = stratified_folds(pos.len(), neg.len(), k, cfg.seed);

    let mut fold_accuracies = Vec::with_capacity(k);
    for (held_pos, held_neg) in &folds {
        let train_pos: Vec<Vec<f64>> = pos
            .iter()
            .enumerate()
            .filter(|(i, _)| !held_pos.contains(i))
            .map(|(_, v)| v.clone())
            .collect();
        let train_neg: Vec<Vec<f64>> = neg
            .iter()
            .enumerate()
            .filter(|(i, _)| !held_neg.contains(i))
            .map(|(_, v)| v.clone())
            .collect();
        let all_train: Vec<Vec<f64>> = train_pos.iter().chain(&train_neg).cloned().collect();
        let scaler = fit_scaler(&all_train)?;
        let std_pos: Vec<Vec<f64>> = train_pos
            .iter()
            .map(|v| scaler.transform(v))
            .collect::<Result<_, _>>()?;
        let std_neg: Vec<Vec<f64>> = train_neg
            .iter()
            .map(|v| scaler.transform(v))
            .collect::<Result<_, _>>()?;
        let model = train_smo(&std_pos, &std_neg, cfg)?;

        let mut correct = 0usize;
        let mut total = 0usize;
        for &i in held_pos {
            let d = model.decision_value(&scaler.transform(&pos[i])?)?;
            if d >= 0.0 {
                correct += 1;
            }
            total += 1;
        }
        for &i in held_neg {
            let d = model.decision_value(&scaler.transform(&neg[i])?)?;
            if d < 0.0 {
                correct += 1;
            }
            total += 1;
        }
        fold_accuracies.push(correct as f64 / total as f64);
    }
    Ok(fold_accuracies.iter().sum::<f64>() / k as f64)
}

/// Out-of-fold decision values for Platt calibration: each example is scored
/// by a model that never saw it. Vectors here are already standardized by
/// the caller's pipeline scaler.
pub(crate) fn held_out_decision_values(
    pos: &[Vec<f64>],
    neg: &[Vec<f64>],
    cfg: &TrainConfig,
    k: usize,
) -> Result<Vec<(f64, bool)>, SvmError> {
    // Degenerate class sizes: score against a model trained on everything.
    if pos.len() < k || neg.len() < k {
        let model = train_smo(pos, neg, cfg)?;
        let mut values = Vec::new();
        for v in pos {
            values.push((model.decision_value(v)?, true));
        }
        for v in neg {
            values.push((model.decision_value(v)?, false));
        }
        return Ok(values);
    }
    let folds = stratified_folds(pos.len(), neg.len(), k, cfg.seed.wrapping_add(1));
    let mut values = Vec::new();
    for (held_pos, held_neg) in &folds {
        let train_pos: Vec<Vec<f64>> = pos
            .iter()
            .enumerate()
            .filter(|(i, _)| !held_pos.contains(i))
            .map(|(_, v)| v.clone())
            .collect();
        let train_neg: Vec<Vec<f64>> = neg
            .iter()
            .enumerate()
            .filter(|(i, _)| !held_neg.contains(i))
            .map(|(_, v)| v.clone())
            .collect();
        if train_pos.is_empty() || train_neg.is_empty() {
            continue;
        }
        let model = train_smo(&train_pos, &train_neg, cfg)?;
        for &i in held_pos {
            values.push((model.decision_value(&pos[i])?, true));
        }
        for &i in held_neg {
            values.push((model.decision_value(&neg[i])?, false));
        }
    }
    Ok(values)
}

/// Coarse hyperparameter grid from the ablation flag: C in {0.1, 1, 10},
/// gamma in {0.001, 0.01, 0.1}. Returns the best config by k-fold accuracy,
/// ties broken in grid order.
pub fn grid_search(
    pos: &[Vec<f64>],
    neg: &[Vec<f64>],
    cfg: &TrainConfig,
    k: usize,
) -> Result<TrainConfig, SvmError> {
    let mut best = cfg.clone();
    let mut best_acc = -1.0f64;
    for &c in &[0.1, 1.0, 10.0] {
        for &gamma in &[0.001, 0.01, 0.1] {
            let candidate = TrainConfig {
                c,
                gamma: GammaSetting::Fixed(gamma),
                ..cfg.clone()
            };
            let acc = cross_validate(pos, neg, &candidate, k)?;
            if acc > best_acc {
                best_acc = acc;
                best = candidate;
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn blob(center: &[f64], n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                center
                    .iter()
                    .map(|&c| c + rng.gen_range(-0.3..0.3))
                    .collect()
            })
            .collect()
    }

    #[test]
    fn separable_data_scores_perfectly() {
        let pos = blob(&[2.0, 2.0], 15, 1);
        let neg = blob(&[-2.0, -2.0], 15, 2);
        let cfg = TrainConfig::default();
        let acc = cross_validate(&pos, &neg, &cfg, 5).unwrap();
        assert_eq!(acc, 1.0);
    }

    #[test]
    fn shuffled_labels_score_near_chance() {
        // Same distribution for both labels: accuracy hovers around 0.5.
        let pos = blob(&[0.0, 0.0], 100, 3);
        let neg = blob(&[0.0, 0.0], 100, 4);
        let cfg = TrainConfig { seed: 5, ..TrainConfig::default() };
        let acc = cross_validate(&pos, &neg, &cfg, 5).unwrap();
        assert!((acc - 0.5).abs() <= 0.1, "accuracy {acc}");
    }

    #[test]
    fn deterministic_given_seed() {
        let pos = blob(&[1.0, 0.5], 10, 6);
        let neg = blob(&[-1.0, -0.5], 10, 7);
        let cfg = TrainConfig { seed: 9, ..TrainConfig::default() };
        let a = cross_validate(&pos, &neg, &cfg, 5).unwrap();
        let b = cross_validate(&pos, &neg, &cfg, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn too_few_samples_is_an_error() {
        let pos = blob(&[1.0], 3, 8);
        let neg = blob(&[-1.0], 10, 9);
        assert!(matches!(
            cross_validate(&pos, &neg, &TrainConfig::default(), 5),
            Err(SvmError::TooFewSamples { need: 5, got: 3 })
        ));
    }
}
