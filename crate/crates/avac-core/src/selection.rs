//! Wrapper-based feature-group selection: sequential forward selection over
//! the 16 groups, scored by stratified 5-fold cross-validation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::derive_seed;
use crate::features::{FeatureGroupId, FEATURE_DIM, LAYOUT_VERSION};
use crate::svm::{cross_validate, SvmError, TrainConfig};

/// Folds used by the wrapper's inner cross-validation.
pub const SELECTION_FOLDS: usize = 5;

/// A subset of the 16 feature groups plus the layout positions it resolves to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureMask {
    /// Included groups in canonical order.
    pub groups: Vec<FeatureGroupId>,
    pub layout_version: u32,
}

impl FeatureMask {
    /// Builds a mask; groups are deduplicated and stored in canonical order.
    pub fn new(groups: impl IntoIterator<Item = FeatureGroupId>) -> Result<FeatureMask, String> {
        let requested: Vec<FeatureGroupId> = groups.into_iter().collect();
        let ordered: Vec<FeatureGroupId> = FeatureGroupId::ALL
            .into_iter()
            .filter(|g| requested.contains(g))
            .collect();
        if ordered.is_empty() {
            return Err("feature mask must include at least one group".into());
        }
        Ok(FeatureMask {
            groups: ordered,
            layout_version: LAYOUT_VERSION,
        })
    }

    pub fn full() -> FeatureMask {
        FeatureMask {
            groups: FeatureGroupId::ALL.to_vec(),
            layout_version: LAYOUT_VERSION,
        }
    }

    /// Layout positions covered by the mask, in canonical group order.
    pub fn resolved_indices(&self) -> Vec<usize> {
        self.groups
            .iter()
            .flat_map(|g| g.layout_indices())
            .collect()
    }

    /// Projects a full 100-dimensional vector onto the masked positions.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), FEATURE_DIM);
        self.resolved_indices().iter().map(|&i| v[i]).collect()
    }

    pub fn dim(&self) -> usize {
        self.groups.iter().map(|g| g.layout_indices().len()).sum()
    }

    /// Comma-separated group names, e.g. `RMS,ZCR,MFCC`.
    pub fn names(&self) -> String {
        self.groups
            .iter()
            .map(|g| g.name())
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn parse_names(text: &str) -> Result<FeatureMask, String> {
        let groups: Result<Vec<FeatureGroupId>, String> = text
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|name| {
                FeatureGroupId::parse(name).ok_or_else(|| format!("unknown feature group {name:?}"))
            })
            .collect();
        FeatureMask::new(groups?)
    }
}

/// One accepted greedy step: the group added and the 5-fold accuracy of the
/// mask after adding it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionStep {
    pub group: FeatureGroupId,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionOutcome {
    pub mask: FeatureMask,
    pub trace: Vec<SelectionStep>,
}

fn masked(vectors: &[Vec<f64>], mask: &FeatureMask) -> Vec<Vec<f64>> {
    vectors.iter().map(|v| mask.apply(v)).collect()
}

/// Sequential forward selection on raw (unstandardized) full-layout vectors.
///
/// Starts empty and greedily adds the group maximizing 5-fold CV accuracy;
/// stops when the best improvement falls below `delta` or all groups are in.
/// Ties break toward the canonical group order. Every candidate in a step is
/// scored against the same fold split, so the comparison is paired and the
/// result deterministic under the seed.
pub fn wrapper_select(
    pos: &[Vec<f64>],
    neg: &[Vec<f64>],
    train_cfg: &TrainConfig,
    delta: f64,
) -> Result<SelectionOutcome, SvmError> {
    let short = pos.len().min(neg.len());
    if short < SELECTION_FOLDS {
        return Err(SvmError::TooFewSamples {
            need: SELECTION_FOLDS,
            got: short,
        });
    }
    let mut selected: Vec<FeatureGroupId> = Vec::new();
    let mut trace: Vec<SelectionStep> = Vec::new();
    let mut current_acc = f64::NEG_INFINITY;

    for step in 0..FeatureGroupId::ALL.len() {
        let remaining: Vec<FeatureGroupId> = FeatureGroupId::ALL
            .into_iter()
            .filter(|g| !selected.contains(g))
            .collect();
        if remaining.is_empty() {
            break;
        }
        let cv_cfg = train_cfg.with_seed(derive_seed(train_cfg.seed, &format!("sfs-step-{step}")));
        let scored: Vec<(FeatureGroupId, f64)> = remaining
            .par_iter()
            .map(|&g| {
                let mut groups = selected.clone();
                groups.push(g);
                let mask = FeatureMask::new(groups).expect("non-empty by construction");
                let acc = cross_validate(
                    &masked(pos, &mask),
                    &masked(neg, &mask),
                    &cv_cfg,
                    SELECTION_FOLDS,
                )?;
                Ok((g, acc))
            })
            .collect::<Result<_, SvmError>>()?;
        let &(best_group, best_acc) = scored
            .iter()
            .reduce(|best, cand| if cand.1 > best.1 { cand } else { best })
            .expect("remaining is non-empty");

        let first_step = selected.is_empty();
        if !first_step && best_acc - current_acc < delta {
            break;
        }
        selected.push(best_group);
        trace.push(SelectionStep {
            group: best_group,
            accuracy: best_acc,
        });
        current_acc = best_acc;
    }

    Ok(SelectionOutcome {
        mask: FeatureMask::new(selected).expect("first step always accepts"),
        trace,
    })
}
