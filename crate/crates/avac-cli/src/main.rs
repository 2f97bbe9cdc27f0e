//! `avac`: train, classify, and evaluate in-vehicle audio classifiers.
//!
//! Exit codes: 0 success, 2 usage errors, 3 data errors (bad inputs,
//! unknown environments, malformed files), 4 internal errors.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use avac_core::audio_io::{
    add_noise_at_snr, load_wav, mix_signals, stft_spectrogram, write_wav, AudioClip,
};
use avac_core::cascade::{
    detect_environment, train_bundle, write_bundle, AudioClass, Environment, EnvironmentRegistry,
    PairKey,
};
use avac_core::config::RunConfig;
use avac_core::eval::{cdf_to_csv, evaluate_manifest, timing_benchmark, Algorithm, EvalMode};
use avac_core::features::{extract_clip_features, layout_descriptors};
use avac_core::manifest::Manifest;
use avac_core::selection::wrapper_select;
use avac_core::svm::model_io::format_f64;

#[derive(Parser)]
#[command(name = "avac", version, about = "Environment-adaptive in-vehicle audio classification")]
struct Cli {
    /// Configuration file (TOML); falls back to $AVAC_CONFIG, then defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the configured random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one environment's model bundle from a manifest.
    Train(TrainArgs),
    /// Classify a WAV file second by second.
    Classify(ClassifyArgs),
    /// Evaluate a registry against a labeled test manifest.
    Evaluate(EvaluateArgs),
    /// Measure per-clip classification time.
    Bench(BenchArgs),
    /// Mix speech with music and/or environment noise at given levels.
    Mix(MixArgs),
    /// Export an STFT magnitude spectrogram as CSV.
    Spectrogram(SpectrogramArgs),
    /// Run wrapper feature selection for one classifier pair.
    Select(SelectArgs),
    /// Extract the feature vector of one clip as CSV.
    Features(FeaturesArgs),
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    env: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Directory holding `<env>.bundle` files.
    #[arg(long)]
    model_dir: PathBuf,
    #[arg(long)]
    input: PathBuf,
    /// Classify with this environment's bundle.
    #[arg(long, conflicts_with = "auto_env")]
    env: Option<String>,
    /// Detect the environment from the leading clip.
    #[arg(long)]
    auto_env: bool,
    /// Skip the classified-clip log.
    #[arg(long)]
    no_log: bool,
    /// Classified-clip log path.
    #[arg(long, default_value = "classified_log.csv")]
    log: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    model_dir: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// `adaptive`, or an environment id to force one bundle everywhere.
    #[arg(long, default_value = "adaptive")]
    mode: String,
    /// `proposed` or `baseline`.
    #[arg(long, default_value = "proposed")]
    algorithm: String,
}

#[derive(Args)]
struct BenchArgs {
    /// A single bundle file.
    #[arg(long)]
    bundle: PathBuf,
    /// Manifest of clips to time (all rows are used).
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Optional CDF output.
    #[arg(long)]
    cdf_out: Option<PathBuf>,
}

#[derive(Args)]
struct MixArgs {
    #[arg(long)]
    speech: PathBuf,
    #[arg(long, requires = "gain")]
    music: Option<PathBuf>,
    /// Gain applied to the music track, in dB.
    #[arg(long, requires = "music", allow_hyphen_values = true)]
    gain: Option<f64>,
    #[arg(long, requires = "snr")]
    noise: Option<PathBuf>,
    /// Signal-to-noise ratio for the noise track, in dB.
    #[arg(long, requires = "noise", allow_hyphen_values = true)]
    snr: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SpectrogramArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 25.0)]
    win_ms: f64,
    #[arg(long, default_value_t = 10.0)]
    hop_ms: f64,
}

#[derive(Args)]
struct SelectArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    env: String,
    /// Classifier pair, e.g. `speech:noise` or `baseline_split`.
    #[arg(long)]
    pair: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FeaturesArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

/// Data-level failure: malformed or missing inputs, exit code 3.
#[derive(Debug)]
struct DataError(anyhow::Error);

impl std::fmt::Display for DataError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

impl std::error::Error for DataError {}

fn data_err(e: impl Into<anyhow::Error>) -> anyhow::Error {
    anyhow::Error::new(DataError(e.into()))
}

/// Atomic artifact write: temp file in the target directory, then rename.
fn write_artifact(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp = match dir {
        Some(d) => d.join(format!(
            ".{}.tmp{}",
            path.file_name().unwrap_or_default().to_string_lossy(),
            std::process::id()
        )),
        None => PathBuf::from(format!(".avac.tmp{}", std::process::id())),
    };
    std::fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    std::fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let path = cli
        .config
        .clone()
        .or_else(|| std::env::var_os("AVAC_CONFIG").map(PathBuf::from));
    let mut cfg = match path {
        Some(p) => RunConfig::load(&p)
            .map_err(|e| data_err(anyhow!("config {}: {e}", p.display())))?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn load_manifest(path: &Path) -> Result<Manifest> {
    Manifest::load(path).map_err(data_err)
}

fn parse_env(text: &str) -> Result<Environment> {
    Environment::parse(text).map_err(|e| data_err(anyhow!(e)))
}

fn load_registry(dir: &Path) -> Result<EnvironmentRegistry> {
    EnvironmentRegistry::load_dir(dir)
        .map_err(|e| data_err(anyhow!("loading bundles from {}: {e}", dir.display())))
}

fn cmd_train(cfg: &RunConfig, args: &TrainArgs) -> Result<()> {
    let manifest = load_manifest(&args.manifest)?;
    let env = parse_env(&args.env)?;
    let rows = manifest.for_environment(&env);
    if rows.is_empty() {
        return Err(data_err(anyhow!(
            "manifest has no rows for environment {env}"
        )));
    }
    let bundle = train_bundle(&rows, cfg).map_err(data_err)?;
    write_artifact(&args.out, write_bundle(&bundle).as_bytes())?;
    eprintln!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_classify(_cfg: &RunConfig, args: &ClassifyArgs) -> Result<()> {
    let registry = load_registry(&args.model_dir)?;
    let full = load_wav(&args.input).map_err(data_err)?;
    let clips = full.split_seconds().map_err(data_err)?;

    let environment = if args.auto_env {
        detect_environment(&registry, &clips[0]).map_err(data_err)?
    } else {
        match &args.env {
            Some(e) => parse_env(e)?,
            None => bail!(data_err(anyhow!("pass --env <ID> or --auto-env"))),
        }
    };
    let bundle = registry.get(&environment).map_err(data_err)?;

    let mut log_lines = Vec::new();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for (index, clip) in clips.iter().enumerate() {
        let result = bundle.classify_clip(clip).map_err(data_err)?;
        writeln!(
            out,
            "{index},{},{},{}",
            result.label.name(),
            environment.id(),
            result.csv_scores()
        )?;
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        log_lines.push(format!(
            "{timestamp},{},{},{},{}",
            args.input.display(),
            environment.id(),
            result.label.name(),
            result.csv_scores()
        ));
    }
    if !args.no_log {
        let mut file = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&args.log)
            .with_context(|| format!("opening log {}", args.log.display()))?;
        if file.metadata()?.len() == 0 {
            writeln!(file, "timestamp,path,environment,label,p_n1,p_n2,p_n3,p_m1,p_m2,d_final")?;
        }
        for line in log_lines {
            writeln!(file, "{line}")?;
        }
    }
    Ok(())
}

fn cmd_evaluate(cfg: &RunConfig, args: &EvaluateArgs) -> Result<()> {
    let registry = load_registry(&args.model_dir)?;
    let manifest = load_manifest(&args.manifest)?;
    let mode = if args.mode.eq_ignore_ascii_case("adaptive") {
        EvalMode::Adaptive
    } else {
        EvalMode::NonAdaptive(parse_env(&args.mode)?)
    };
    let algorithm = match args.algorithm.to_ascii_lowercase().as_str() {
        "proposed" => Algorithm::Proposed,
        "baseline" => Algorithm::Baseline,
        other => return Err(data_err(anyhow!("unknown algorithm {other:?}"))),
    };
    let report = evaluate_manifest(&registry, &manifest, &mode, algorithm).map_err(data_err)?;
    let payload = format!("{}{}", cfg.artifact_header(), report.to_csv());
    write_artifact(&args.out, payload.as_bytes())?;
    eprintln!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_bench(cfg: &RunConfig, args: &BenchArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.bundle)
        .with_context(|| format!("reading {}", args.bundle.display()))?;
    let bundle = avac_core::cascade::read_bundle(&text).map_err(data_err)?;
    let manifest = load_manifest(&args.manifest)?;
    let clips: Vec<AudioClip> = manifest
        .rows
        .iter()
        .map(|row| load_wav(&row.path).map_err(data_err))
        .collect::<Result<_>>()?;
    let report = timing_benchmark(&bundle, &clips).map_err(data_err)?;
    let payload = format!("{}{}", cfg.artifact_header(), report.to_csv());
    write_artifact(&args.out, payload.as_bytes())?;
    eprintln!(
        "median {:.3} ms over {} clips -> {}",
        report.median_ms(),
        clips.len(),
        args.out.display()
    );
    if let Some(cdf_out) = &args.cdf_out {
        let payload = format!("{}{}", cfg.artifact_header(), cdf_to_csv(&report.cdf));
        write_artifact(cdf_out, payload.as_bytes())?;
    }
    Ok(())
}

/// Rewrites a WAV with a trailing metadata chunk carrying the config echo.
fn write_wav_artifact(path: &Path, clip: &AudioClip, cfg: &RunConfig) -> Result<()> {
    let tmp = path.with_extension("wav.tmp");
    write_wav(&tmp, clip).map_err(data_err)?;
    let mut bytes = std::fs::read(&tmp)?;
    std::fs::remove_file(&tmp).ok();
    let note = cfg.artifact_header();
    let mut chunk = Vec::new();
    chunk.extend_from_slice(b"avat");
    chunk.extend_from_slice(&(note.len() as u32).to_le_bytes());
    chunk.extend_from_slice(note.as_bytes());
    if note.len() % 2 == 1 {
        chunk.push(0); // chunk bodies are word-aligned
    }
    bytes.extend_from_slice(&chunk);
    // Patch the RIFF size field.
    let riff_size = (bytes.len() - 8) as u32;
    bytes[4..8].copy_from_slice(&riff_size.to_le_bytes());
    write_artifact(path, &bytes)
}

fn cmd_mix(cfg: &RunConfig, args: &MixArgs) -> Result<()> {
    if args.music.is_none() && args.noise.is_none() {
        return Err(data_err(anyhow!("nothing to mix: pass --music and/or --noise")));
    }
    let mut signal = load_wav(&args.speech).map_err(data_err)?;
    if let (Some(music), Some(gain)) = (&args.music, args.gain) {
        let music = load_wav(music).map_err(data_err)?;
        signal = mix_signals(&signal, &music, gain).map_err(data_err)?;
    }
    if let (Some(noise), Some(snr)) = (&args.noise, args.snr) {
        let noise = load_wav(noise).map_err(data_err)?;
        signal = add_noise_at_snr(&signal, &noise, snr).map_err(data_err)?;
    }
    write_wav_artifact(&args.out, &signal, cfg)?;
    eprintln!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_spectrogram(cfg: &RunConfig, args: &SpectrogramArgs) -> Result<()> {
    let clip = load_wav(&args.input).map_err(data_err)?;
    let spec = stft_spectrogram(&clip, args.win_ms, args.hop_ms).map_err(data_err)?;
    let payload = format!("{}{}", cfg.artifact_header(), spec.to_csv());
    write_artifact(&args.out, payload.as_bytes())?;
    eprintln!(
        "wrote {} ({} frames x {} bins)",
        args.out.display(),
        spec.num_frames(),
        spec.bin_hz.len()
    );
    Ok(())
}

fn cmd_select(cfg: &RunConfig, args: &SelectArgs) -> Result<()> {
    let manifest = load_manifest(&args.manifest)?;
    let env = parse_env(&args.env)?;
    let rows = manifest.for_environment(&env);
    if rows.is_empty() {
        return Err(data_err(anyhow!("manifest has no rows for environment {env}")));
    }
    // Gather raw feature vectors for the two sides of the pair.
    let collect = |classes: &[AudioClass]| -> Result<Vec<Vec<f64>>> {
        rows.iter()
            .filter(|r| classes.contains(&r.label))
            .map(|r| {
                let clip = load_wav(&r.path).map_err(data_err)?;
                Ok(extract_clip_features(&clip, &cfg.features)
                    .map_err(data_err)?
                    .values)
            })
            .collect()
    };
    let (pos, neg, pair_name) = if args.pair == "baseline_split" {
        (
            collect(&[AudioClass::Speech, AudioClass::SpeechMusic])?,
            collect(&[AudioClass::Music, AudioClass::Noise])?,
            "baseline_split".to_string(),
        )
    } else {
        let key = PairKey::parse(&args.pair)
            .ok_or_else(|| data_err(anyhow!("unknown pair {:?}", args.pair)))?;
        (
            collect(&[key.target])?,
            collect(&[key.other])?,
            key.name(),
        )
    };
    let outcome = wrapper_select(
        &pos,
        &neg,
        &cfg.train_config(),
        cfg.selection_delta,
    )
    .map_err(data_err)?;

    let doc = serde_json::json!({
        "tool_version": avac_core::TOOL_VERSION,
        "config": cfg.echo_string(),
        "environment": env.id(),
        "pair": pair_name,
        "layout_version": outcome.mask.layout_version,
        "groups": outcome.mask.groups.iter().map(|g| g.name()).collect::<Vec<_>>(),
        "resolved_indices": outcome.mask.resolved_indices(),
        "cv_accuracy_trace": outcome.trace,
    });
    write_artifact(&args.out, serde_json::to_string_pretty(&doc)?.as_bytes())?;
    eprintln!("selected {} -> {}", outcome.mask.names(), args.out.display());
    Ok(())
}

fn cmd_features(cfg: &RunConfig, args: &FeaturesArgs) -> Result<()> {
    let clip = load_wav(&args.input).map_err(data_err)?;
    let fv = extract_clip_features(&clip, &cfg.features).map_err(data_err)?;
    let mut payload = cfg.artifact_header();
    payload.push_str(&layout_descriptors().join(","));
    payload.push('\n');
    let cells: Vec<String> = fv.values.iter().map(|&v| format_f64(v)).collect();
    payload.push_str(&cells.join(","));
    payload.push('\n');
    write_artifact(&args.out, payload.as_bytes())?;
    eprintln!("wrote {}", args.out.display());
    Ok(())
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    let cfg = load_config(&cli)?;
    match &cli.command {
        Command::Train(args) => cmd_train(&cfg, args),
        Command::Classify(args) => cmd_classify(&cfg, args),
        Command::Evaluate(args) => cmd_evaluate(&cfg, args),
        Command::Bench(args) => cmd_bench(&cfg, args),
        Command::Mix(args) => cmd_mix(&cfg, args),
        Command::Spectrogram(args) => cmd_spectrogram(&cfg, args),
        Command::Select(args) => cmd_select(&cfg, args),
        Command::Features(args) => cmd_features(&cfg, args),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.chain().any(|cause| cause.is::<DataError>()) || e.is::<DataError>() {
                ExitCode::from(3)
            } else {
                ExitCode::from(4)
            }
        }
    }
}
