//! Experiment harness: accuracy tables and confusion matrices per
//! environment, accuracy CDFs, the timing benchmark, the genre comparison,
//! and the adaptive-vs-non-adaptive motivation experiment.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use thiserror::Error;

use crate::audio_io::{load_wav, AudioClip};
use crate::cascade::{
    train_registry, AudioClass, CascadeError, Environment, EnvironmentRegistry, ModelBundle,
};
use crate::config::RunConfig;
use crate::manifest::{Manifest, ManifestRow};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("manifest has no rows")]
    EmptyManifest,
    #[error("empty input")]
    EmptyInput,
    #[error("music row {0} has no genre tag")]
    MissingGenreColumn(String),
    #[error(transparent)]
    Cascade(#[from] CascadeError),
}

/// Which bundle classifies each clip.
#[derive(Debug, Clone, PartialEq)]
pub enum EvalMode {
    /// Route each clip to the bundle of its manifest environment.
    Adaptive,
    /// Force one environment's bundle for every clip.
    NonAdaptive(Environment),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// The two-stage noise/music cascade.
    Proposed,
    /// The speech/non-speech-first hierarchy (same noise stage).
    Baseline,
}

/// Confusion matrix and per-class accuracy for one environment.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvReport {
    /// `confusion[true][predicted]` over [`AudioClass::ALL`] order.
    pub confusion: [[usize; 4]; 4],
}

impl EnvReport {
    pub fn class_count(&self, class: AudioClass) -> usize {
        self.confusion[class.index()].iter().sum()
    }

    pub fn accuracy(&self, class: AudioClass) -> Option<f64> {
        let total = self.class_count(class);
        if total == 0 {
            return None;
        }
        Some(self.confusion[class.index()][class.index()] as f64 / total as f64)
    }

    /// Mean of the per-class accuracies over classes that have clips.
    pub fn average(&self) -> Option<f64> {
        let accs: Vec<f64> = AudioClass::ALL.iter().filter_map(|c| self.accuracy(*c)).collect();
        if accs.is_empty() {
            return None;
        }
        Some(accs.iter().sum::<f64>() / accs.len() as f64)
    }
}

/// Environment headers plus `(row_name, cells)` rows of a rendered report.
pub type ParsedReportCsv = (Vec<String>, Vec<(String, Vec<Option<f64>>)>);

/// Accuracy per (environment x class), Table-II shaped.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AccuracyReport {
    pub per_env: BTreeMap<String, EnvReport>,
}

impl AccuracyReport {
    pub fn environments(&self) -> Vec<&str> {
        self.per_env.keys().map(String::as_str).collect()
    }

    pub fn accuracy(&self, env: &str, class: AudioClass) -> Option<f64> {
        self.per_env.get(env)?.accuracy(class)
    }

    /// CSV payload: rows are classes plus `average`, columns environments,
    /// cells accuracy to three decimals (empty when a cell has no clips).
    pub fn to_csv(&self) -> String {
        let envs = self.environments();
        let mut out = String::from("class");
        for e in &envs {
            out.push(',');
            out.push_str(e);
        }
        out.push('\n');
        let cell = |acc: Option<f64>| acc.map(|a| format!("{a:.3}")).unwrap_or_default();
        for class in AudioClass::ALL {
            out.push_str(class.name());
            for e in &envs {
                out.push(',');
                out.push_str(&cell(self.accuracy(e, class)));
            }
            out.push('\n');
        }
        out.push_str("average");
        for e in &envs {
            out.push(',');
            out.push_str(&cell(self.per_env[*e].average()));
        }
        out.push('\n');
        out
    }

    /// Parses the accuracy-table CSV back into `(header, rows)` form.
    /// Comment lines (`#`) are skipped.
    pub fn parse_csv(text: &str) -> Result<ParsedReportCsv, EvalError> {
        let mut lines = text.lines().filter(|l| !l.starts_with('#'));
        let header = lines.next().ok_or(EvalError::EmptyInput)?;
        let envs: Vec<String> = header.split(',').skip(1).map(String::from).collect();
        let mut rows = Vec::new();
        for line in lines {
            if line.trim().is_empty() {
                continue;
            }
            let mut cells = line.split(',');
            let name = cells.next().unwrap_or_default().to_string();
            let values: Vec<Option<f64>> = cells
                .map(|c| if c.is_empty() { None } else { c.parse::<f64>().ok() })
                .collect();
            rows.push((name, values));
        }
        Ok((envs, rows))
    }
}

/// Core evaluation loop over manifest rows with an injected classifier;
/// the report buckets by each row's true environment.
pub fn evaluate_with<F>(manifest: &Manifest, classify: F) -> Result<AccuracyReport, EvalError>
where
    F: Fn(&ManifestRow) -> Result<AudioClass, EvalError> + Sync,
{
    if manifest.rows.is_empty() {
        return Err(EvalError::EmptyManifest);
    }
    let outcomes: Vec<(Environment, AudioClass, AudioClass)> = manifest
        .rows
        .par_iter()
        .map(|row| Ok((row.environment.clone(), row.label, classify(row)?)))
        .collect::<Result<_, EvalError>>()?;

    let mut per_env: BTreeMap<String, EnvReport> = BTreeMap::new();
    for (env, truth, predicted) in outcomes {
        let report = per_env
            .entry(env.id().to_string())
            .or_insert_with(|| EnvReport { confusion: [[0; 4]; 4] });
        report.confusion[truth.index()][predicted.index()] += 1;
    }
    Ok(AccuracyReport { per_env })
}

fn classify_row(
    registry: &EnvironmentRegistry,
    mode: &EvalMode,
    algorithm: Algorithm,
    row: &ManifestRow,
) -> Result<AudioClass, EvalError> {
    let env = match mode {
        EvalMode::Adaptive => &row.environment,
        EvalMode::NonAdaptive(forced) => forced,
    };
    let bundle = registry.get(env)?;
    let clip = load_wav(&row.path).map_err(CascadeError::from)?;
    let result = match algorithm {
        Algorithm::Proposed => bundle.classify_clip(&clip)?,
        Algorithm::Baseline => bundle.baseline_classify_clip(&clip)?,
    };
    Ok(result.label)
}

/// Classifies every manifest clip and tabulates accuracy per environment.
pub fn evaluate_manifest(
    registry: &EnvironmentRegistry,
    manifest: &Manifest,
    mode: &EvalMode,
    algorithm: Algorithm,
) -> Result<AccuracyReport, EvalError> {
    // Fail fast on a missing forced environment.
    if let EvalMode::NonAdaptive(env) = mode {
        registry.get(env)?;
    }
    evaluate_with(manifest, |row| classify_row(registry, mode, algorithm, row))
}

// ---------------------------------------------------------------------------
// Accuracy CDF
// ---------------------------------------------------------------------------

/// Per-window accuracies over consecutive same-class windows of `window`
/// clips; the trailing partial window is dropped.
pub fn window_accuracies(outcomes: &[bool], window: usize) -> Vec<f64> {
    assert!(window >= 1);
    outcomes
        .chunks_exact(window)
        .map(|w| w.iter().filter(|&&ok| ok).count() as f64 / window as f64)
        .collect()
}

/// Empirical CDF as sorted `(value, cumulative_fraction)` steps; duplicate
/// values collapse into one step and the last step reaches 1.
pub fn accuracy_cdf(values: &[f64]) -> Result<Vec<(f64, f64)>, EvalError> {
    if values.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, v) in sorted.iter().enumerate() {
        let cum = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == *v => last.1 = cum,
            _ => out.push((*v, cum)),
        }
    }
    Ok(out)
}

/// CDF CSV payload: `value,cum_fraction`.
pub fn cdf_to_csv(cdf: &[(f64, f64)]) -> String {
    let mut out = String::from("value,cum_fraction\n");
    for (v, c) in cdf {
        out.push_str(&format!("{v},{c}\n"));
    }
    out
}

// ---------------------------------------------------------------------------
// Timing benchmark
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct TimingReport {
    pub per_clip: Vec<Duration>,
    pub cdf: Vec<(f64, f64)>,
}

impl TimingReport {
    pub fn median_ms(&self) -> f64 {
        let mut ms: Vec<f64> = self.per_clip.iter().map(|d| d.as_secs_f64() * 1e3).collect();
        ms.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = ms.len();
        if n % 2 == 1 {
            ms[n / 2]
        } else {
            0.5 * (ms[n / 2 - 1] + ms[n / 2])
        }
    }

    /// Timing CSV payload; decode time is excluded by construction (clips
    /// are already in memory when the clock starts).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("# classification path only: feature extraction + cascade (WAV decode excluded)\n");
        out.push_str("clip_index,elapsed_ms\n");
        for (i, d) in self.per_clip.iter().enumerate() {
            out.push_str(&format!("{i},{:.3}\n", d.as_secs_f64() * 1e3));
        }
        out
    }
}

/// Wall-clock cost of `extract_clip_features` + `classify_clip` per clip,
/// after 3 untimed warm-up runs. Needs at least 10 clips.
pub fn timing_benchmark(bundle: &ModelBundle, clips: &[AudioClip]) -> Result<TimingReport, EvalError> {
    if clips.len() < 10 {
        return Err(EvalError::EmptyInput);
    }
    for clip in clips.iter().take(3) {
        let _ = bundle.classify_clip(clip).map_err(EvalError::from)?;
    }
    let mut per_clip = Vec::with_capacity(clips.len());
    for clip in clips {
        let start = Instant::now();
        let _ = bundle.classify_clip(clip).map_err(EvalError::from)?;
        per_clip.push(start.elapsed());
    }
    let ms: Vec<f64> = per_clip.iter().map(|d| d.as_secs_f64() * 1e3).collect();
    let cdf = accuracy_cdf(&ms)?;
    Ok(TimingReport { per_clip, cdf })
}

// ---------------------------------------------------------------------------
// Genre experiment
// ---------------------------------------------------------------------------

/// MUSIC accuracy per genre under two registries (single-genre-trained vs
/// multi-genre-trained). Non-music rows are ignored; music rows must carry
/// a genre tag.
#[derive(Debug, Clone, PartialEq)]
pub struct GenreReport {
    /// genre -> (single-genre-trained accuracy, multi-genre-trained accuracy).
    pub per_genre: BTreeMap<String, (f64, f64)>,
}

impl GenreReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("genre,single_trained,multi_trained\n");
        for (genre, (single, multi)) in &self.per_genre {
            out.push_str(&format!("{genre},{single:.3},{multi:.3}\n"));
        }
        out
    }
}

/// MUSIC accuracy per genre for one registry (adaptive routing).
pub fn genre_music_accuracy(
    registry: &EnvironmentRegistry,
    manifest: &Manifest,
) -> Result<BTreeMap<String, f64>, EvalError> {
    let music_rows: Vec<&ManifestRow> = manifest
        .rows
        .iter()
        .filter(|r| r.label == AudioClass::Music)
        .collect();
    if music_rows.is_empty() {
        return Err(EvalError::EmptyManifest);
    }
    for row in &music_rows {
        if row.genre.is_none() {
            return Err(EvalError::MissingGenreColumn(row.path.display().to_string()));
        }
    }
    let outcomes: Vec<(String, bool)> = music_rows
        .par_iter()
        .map(|row| {
            let label = classify_row(registry, &EvalMode::Adaptive, Algorithm::Proposed, row)?;
            Ok((
                row.genre.clone().expect("checked above"),
                label == AudioClass::Music,
            ))
        })
        .collect::<Result<_, EvalError>>()?;
    let mut hits: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for (genre, ok) in outcomes {
        let e = hits.entry(genre).or_insert((0, 0));
        e.1 += 1;
        if ok {
            e.0 += 1;
        }
    }
    Ok(hits
        .into_iter()
        .map(|(g, (correct, total))| (g, correct as f64 / total as f64))
        .collect())
}

pub fn genre_report(
    single_trained: &EnvironmentRegistry,
    multi_trained: &EnvironmentRegistry,
    manifest: &Manifest,
) -> Result<GenreReport, EvalError> {
    let single = genre_music_accuracy(single_trained, manifest)?;
    let multi = genre_music_accuracy(multi_trained, manifest)?;
    let mut per_genre = BTreeMap::new();
    for (genre, s) in single {
        let m = multi.get(&genre).copied().unwrap_or(0.0);
        per_genre.insert(genre, (s, m));
    }
    Ok(GenreReport { per_genre })
}

// ---------------------------------------------------------------------------
// Motivation experiment
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct MotivationReport {
    pub adaptive: AccuracyReport,
    pub non_adaptive: AccuracyReport,
    pub baseline_env: Environment,
    /// (adaptive - non_adaptive) / non_adaptive per environment and class;
    /// `None` where either side has no clips or the denominator is zero.
    pub relative_improvement: BTreeMap<String, [Option<f64>; 4]>,
}

impl MotivationReport {
    /// Side-by-side CSV with a documented improvement formula.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "# improvement = (adaptive - non_adaptive) / non_adaptive, per class\n",
        );
        out.push_str("environment,class,adaptive,non_adaptive,improvement\n");
        for (env, improvements) in &self.relative_improvement {
            for class in AudioClass::ALL {
                let a = self.adaptive.accuracy(env, class);
                let n = self.non_adaptive.accuracy(env, class);
                let cell = |v: Option<f64>| v.map(|x| format!("{x:.3}")).unwrap_or_default();
                out.push_str(&format!(
                    "{env},{},{},{},{}\n",
                    class.name(),
                    cell(a),
                    cell(n),
                    cell(improvements[class.index()]),
                ));
            }
        }
        out
    }
}

/// Trains per-environment bundles and a single stationary-environment
/// baseline, then evaluates both ways over the test manifest.
pub fn motivation_experiment(
    train_manifest: &Manifest,
    test_manifest: &Manifest,
    cfg: &RunConfig,
) -> Result<MotivationReport, EvalError> {
    let registry = train_registry(train_manifest, cfg)?;
    let envs = registry.environments();
    let idle = Environment::parse("IDLE").expect("static id");
    let baseline_env = if envs.contains(&idle) {
        idle
    } else {
        envs.first().ok_or(EvalError::EmptyManifest)?.clone()
    };

    let adaptive = evaluate_manifest(&registry, test_manifest, &EvalMode::Adaptive, Algorithm::Proposed)?;
    let non_adaptive = evaluate_manifest(
        &registry,
        test_manifest,
        &EvalMode::NonAdaptive(baseline_env.clone()),
        Algorithm::Proposed,
    )?;

    let mut relative_improvement = BTreeMap::new();
    for env in adaptive.environments() {
        let mut row = [None; 4];
        for class in AudioClass::ALL {
            let a = adaptive.accuracy(env, class);
            let n = non_adaptive.accuracy(env, class);
            row[class.index()] = match (a, n) {
                (Some(a), Some(n)) if n > 0.0 => Some((a - n) / n),
                _ => None,
            };
        }
        relative_improvement.insert(env.to_string(), row);
    }
    Ok(MotivationReport {
        adaptive,
        non_adaptive,
        baseline_env,
        relative_improvement,
    })
}
