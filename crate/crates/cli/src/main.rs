mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use serde::Serialize;

use vocalprint::emd::{eemd_decompose, emd_decompose, SiftConfig};
use vocalprint::eval::{self, EvalConfig, EvalReport, FeatureConfig, FeatureMode};
use vocalprint::features::FeatureMatrix;
use vocalprint::gmm::{classify_sequence, train_alpha_gmm, AlphaGmmModel, TrainConfig};
use vocalprint::hhhc::{InsConfig, InsSummary};
use vocalprint::hurst::extract_ph;
use vocalprint::ins::{
    ins_profile, ins_vector_for_imfs, log_spaced_scales, InsProfile, DEFAULT_SURROGATES,
};
use vocalprint::signal::{
    load_wav, resample_to_8k, select_voiced, CorpusManifest, Signal, VoicingConfig,
};
use vocalprint::synth::{synth_corpus, LabelSpec};

const SUBCOMMANDS: &[&str] = &[
    "decompose",
    "hurst",
    "hhhc",
    "ins",
    "synth",
    "train",
    "classify",
    "evaluate",
];

/// Affective speech analysis: EMD/EEMD, wavelet Hurst features, the index
/// of non-stationarity and alpha-GMM classification.
#[derive(Parser, Debug)]
#[command(name = "vocalprint", version, args_override_self = true)]
struct Cli {
    /// Worker threads; 0 uses every core. Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// `key = value` settings file (keys are flag names). Command-line flags
    /// override it.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decompose a recording into intrinsic mode functions.
    Decompose(DecomposeArgs),
    /// Frame-wise Hurst exponent of the raw signal (pH feature).
    Hurst(HurstArgs),
    /// HHHC feature matrix, optionally with INS columns.
    Hhhc(HhhcArgs),
    /// Index of non-stationarity over a grid of observation scales.
    Ins(InsArgs),
    /// Write a synthetic two-class corpus with a manifest.
    Synth(SynthArgs),
    /// Train one alpha-GMM from feature CSV files.
    Train(TrainArgs),
    /// Classify a feature CSV against trained models.
    Classify(ClassifyArgs),
    /// Leave-one-speaker-out evaluation of a manifest.
    Evaluate(EvaluateArgs),
}

#[derive(ValueEnum, Serialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum Method {
    Emd,
    Eemd,
}

#[derive(ValueEnum, Serialize, Clone, Copy, Debug, PartialEq, Eq)]
enum Feature {
    #[value(name = "hhhc")]
    #[serde(rename = "hhhc")]
    Hhhc,
    #[value(name = "hhhc+ins")]
    #[serde(rename = "hhhc+ins")]
    HhhcIns,
    #[value(name = "ph")]
    #[serde(rename = "ph")]
    Ph,
}

impl From<Feature> for FeatureMode {
    fn from(f: Feature) -> Self {
        match f {
            Feature::Hhhc => FeatureMode::Hhhc,
            Feature::HhhcIns => FeatureMode::HhhcIns,
            Feature::Ph => FeatureMode::Ph,
        }
    }
}

#[derive(Args, Serialize, Clone, Debug)]
struct SiftArgs {
    /// Plain EMD or the noise-assisted ensemble.
    #[arg(long, value_enum, default_value_t = Method::Eemd)]
    method: Method,
    #[arg(long, default_value_t = 6)]
    max_imfs: usize,
    /// Ensemble size for EEMD.
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// EEMD noise std relative to the signal std.
    #[arg(long, default_value_t = 0.01)]
    noise_std: f64,
    #[arg(long, default_value_t = 0.2)]
    sd_threshold: f64,
    #[arg(long, default_value_t = 50)]
    max_sift_iters: usize,
}

impl SiftArgs {
    fn config(&self, seed: u64) -> SiftConfig {
        SiftConfig {
            max_imfs: self.max_imfs,
            max_sift_iters: self.max_sift_iters,
            sd_threshold: self.sd_threshold,
            ensemble_trials: self.trials,
            noise_std: self.noise_std,
            rng_seed: seed,
        }
    }
}

#[derive(Args, Serialize, Clone, Debug)]
struct VoicingArgs {
    #[arg(long, default_value_t = 16.0)]
    frame_ms: f64,
    /// Frames need at least this energy quantile to count as voiced.
    #[arg(long, default_value_t = 0.5)]
    energy_quantile: f64,
    /// Frames need at most this zero-crossing-rate quantile.
    #[arg(long, default_value_t = 0.5)]
    zcr_quantile: f64,
}

impl VoicingArgs {
    fn config(&self) -> VoicingConfig {
        VoicingConfig {
            frame_ms: self.frame_ms,
            energy_quantile: self.energy_quantile,
            zcr_quantile: self.zcr_quantile,
        }
    }
}

#[derive(Args, Serialize, Clone, Debug)]
struct InputArgs {
    /// Input WAV file.
    #[arg(long = "in", value_name = "WAV")]
    #[serde(rename = "in")]
    input: PathBuf,
    /// Keep only voiced frames before analysis.
    #[arg(long)]
    voiced: bool,
    #[command(flatten)]
    #[serde(flatten)]
    voicing: VoicingArgs,
}

impl InputArgs {
    fn load(&self) -> Result<Signal> {
        let raw =
            load_wav(&self.input).with_context(|| format!("loading {}", self.input.display()))?;
        let sig = resample_to_8k(&raw)?;
        if self.voiced {
            Ok(select_voiced(&sig, &self.voicing.config())?)
        } else {
            Ok(sig)
        }
    }
}

#[derive(Args, Serialize, Clone, Debug)]
struct ScaleArgs {
    /// Number of log-spaced observation scales.
    #[arg(long, default_value_t = 10)]
    scales: usize,
    #[arg(long, default_value_t = 0.0015)]
    scale_min: f64,
    #[arg(long, default_value_t = 0.5)]
    scale_max: f64,
    #[arg(long, default_value_t = DEFAULT_SURROGATES)]
    surrogates: usize,
}

impl ScaleArgs {
    fn grid(&self) -> Result<Vec<f64>> {
        if self.scales == 0
            || !(self.scale_min > 0.0 && self.scale_min <= self.scale_max && self.scale_max <= 1.0)
        {
            return Err(usage(
                "scales must be >= 1 and 0 < scale-min <= scale-max <= 1",
            ));
        }
        Ok(log_spaced_scales(
            self.scale_min,
            self.scale_max,
            self.scales,
        ))
    }

    fn ins_config(&self, full: bool) -> Result<InsConfig> {
        Ok(InsConfig {
            scales: self.grid()?,
            surrogates: self.surrogates,
            summary: if full {
                InsSummary::Full
            } else {
                InsSummary::Median
            },
            seed: 0,
        })
    }
}

#[derive(Args, Serialize, Debug)]
struct DecomposeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    input: InputArgs,
    /// Output CSV: time in seconds, one column per mode, then the residual.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    sift: SiftArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Serialize, Debug)]
struct HurstArgs {
    #[command(flatten)]
    #[serde(flatten)]
    input: InputArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize, Debug)]
struct HhhcArgs {
    #[command(flatten)]
    #[serde(flatten)]
    input: InputArgs,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    sift: SiftArgs,
    /// Append per-mode INS columns.
    #[arg(long)]
    ins: bool,
    /// Append INS at every scale instead of the median per mode; implies --ins.
    #[arg(long)]
    ins_full: bool,
    #[command(flatten)]
    #[serde(flatten)]
    scale: ScaleArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Serialize, Debug)]
struct InsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    input: InputArgs,
    /// Output CSV with columns scale,ins,gamma,verdict.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    scale: ScaleArgs,
    /// Test every mode of the decomposition instead of the raw signal.
    #[arg(long)]
    imfs: bool,
    #[command(flatten)]
    #[serde(flatten)]
    sift: SiftArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Serialize, Debug)]
struct SynthArgs {
    /// Output directory for WAVs and manifest.csv.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 4)]
    speakers: usize,
    /// Seconds of audio per label and speaker.
    #[arg(long, default_value_t = 60.0)]
    seconds: f64,
    /// Carrier Hurst index of the high-arousal class.
    #[arg(long, default_value_t = 0.3)]
    high_h: f64,
    /// Carrier Hurst index of the low-arousal class.
    #[arg(long, default_value_t = 0.8)]
    low_h: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Serialize, Clone, Debug)]
struct GmmArgs {
    #[arg(long, default_value_t = 32)]
    mixtures: usize,
    #[arg(long, default_value_t = 200)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    /// Absolute variance floor.
    #[arg(long, default_value_t = 1e-6)]
    min_variance: f64,
}

impl GmmArgs {
    fn config(&self, alpha: f64, seed: u64) -> TrainConfig {
        TrainConfig {
            mixtures: self.mixtures,
            alpha,
            max_iters: self.max_iters,
            tol: self.tol,
            min_variance: self.min_variance,
            seed,
            ..TrainConfig::default()
        }
    }
}

#[derive(Args, Serialize, Debug)]
struct TrainArgs {
    /// Feature CSV files, comma separated; their rows are pooled.
    #[arg(long, value_delimiter = ',', required = true)]
    features: Vec<PathBuf>,
    #[arg(long)]
    label: String,
    /// Output model file.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = -4.0, allow_negative_numbers = true)]
    alpha: f64,
    #[command(flatten)]
    #[serde(flatten)]
    gmm: GmmArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Serialize, Debug)]
struct ClassifyArgs {
    /// Feature CSV of the segment to classify.
    #[arg(long)]
    features: PathBuf,
    /// Model files, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    models: Vec<PathBuf>,
    /// Output CSV with one score per model.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize, Debug)]
struct EvaluateArgs {
    /// Manifest CSV with header path,label,speaker.
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, value_enum, default_value_t = Feature::Hhhc)]
    feature: Feature,
    /// One alpha, or a comma-separated sweep.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "-4",
        allow_hyphen_values = true
    )]
    alpha: Vec<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    gmm: GmmArgs,
    /// Seconds of voiced audio drawn per label for training.
    #[arg(long, default_value_t = 32.0)]
    train_seconds: f64,
    /// Test segment length.
    #[arg(long, default_value_t = 800.0)]
    segment_ms: f64,
    #[command(flatten)]
    #[serde(flatten)]
    sift: SiftArgs,
    #[command(flatten)]
    #[serde(flatten)]
    scale: ScaleArgs,
    #[arg(long)]
    ins_full: bool,
    #[command(flatten)]
    #[serde(flatten)]
    voicing: VoicingArgs,
    /// Output directory for the report CSVs.
    #[arg(long, default_value = "eval_out")]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// A usage problem detected after parsing.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: &str) -> anyhow::Error {
    UsageError(msg.to_string()).into()
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".config");
    PathBuf::from(s)
}

fn create_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(())
}

fn decompose(a: &DecomposeArgs, jobs: usize) -> Result<()> {
    let sig = a.input.load()?;
    let cfg = a.sift.config(a.seed);
    let set = match a.sift.method {
        Method::Emd => emd_decompose(sig.samples(), &cfg)?,
        Method::Eemd => eemd_decompose(sig.samples(), &cfg)?,
    };
    let mut schema = vec!["t".to_string()];
    schema.extend((1..=set.n_modes()).map(|m| format!("imf{m}")));
    schema.push("residual".into());
    let rate = sig.sample_rate_hz() as f64;
    let rows = (0..sig.len())
        .map(|t| {
            let mut row = vec![t as f64 / rate];
            row.extend(set.modes.iter().map(|m| m[t]));
            row.push(set.residual[t]);
            row
        })
        .collect();
    let fm = FeatureMatrix::new(schema, rows, a.input.input.display().to_string())?;
    create_parent(&a.out)?;
    fm.write_csv(&a.out)?;
    config::write_sidecar(&sidecar_path(&a.out), "decompose", a, jobs)?;
    info!("{} natural modes", set.natural_modes());
    Ok(())
}

fn hurst(a: &HurstArgs, jobs: usize) -> Result<()> {
    let fm = extract_ph(&a.input.load()?)?;
    create_parent(&a.out)?;
    fm.write_csv(&a.out)?;
    config::write_sidecar(&sidecar_path(&a.out), "hurst", a, jobs)
}

fn hhhc(a: &HhhcArgs, jobs: usize) -> Result<()> {
    let sig = a.input.load()?;
    let fc = FeatureConfig {
        mode: if a.ins || a.ins_full {
            FeatureMode::HhhcIns
        } else {
            FeatureMode::Hhhc
        },
        sift: a.sift.config(0),
        use_eemd: a.sift.method == Method::Eemd,
        ins: a.scale.ins_config(a.ins_full)?,
    };
    let fm = fc.extract(&sig, a.seed)?;
    create_parent(&a.out)?;
    fm.write_csv(&a.out)?;
    config::write_sidecar(&sidecar_path(&a.out), "hhhc", a, jobs)
}

fn profile_rows(out: &mut String, imf: Option<usize>, p: &InsProfile) {
    for i in 0..p.scales.len() {
        if let Some(m) = imf {
            out.push_str(&format!("{m},"));
        }
        out.push_str(&format!(
            "{:.6e},{:.10e},{:.10e},{}\n",
            p.scales[i], p.ins_values[i], p.gamma_thresholds[i], p.verdicts[i]
        ));
    }
}

fn ins(a: &InsArgs, jobs: usize) -> Result<()> {
    let sig = a.input.load()?;
    let scales = a.scale.grid()?;
    let mut out = String::new();
    if a.imfs {
        let cfg = a.sift.config(a.seed);
        let set = match a.sift.method {
            Method::Emd => emd_decompose(sig.samples(), &cfg)?,
            Method::Eemd => eemd_decompose(sig.samples(), &cfg)?,
        };
        let profiles = ins_vector_for_imfs(&set, &scales, a.scale.surrogates, a.seed)?;
        out.push_str("imf,scale,ins,gamma,verdict\n");
        for (m, p) in profiles.iter().enumerate() {
            profile_rows(&mut out, Some(m + 1), p);
        }
    } else {
        let p = ins_profile(sig.samples(), &scales, a.scale.surrogates, a.seed)?;
        out.push_str("scale,ins,gamma,verdict\n");
        profile_rows(&mut out, None, &p);
    }
    create_parent(&a.out)?;
    fs::write(&a.out, out).with_context(|| format!("writing {}", a.out.display()))?;
    config::write_sidecar(&sidecar_path(&a.out), "ins", a, jobs)
}

fn synth(a: &SynthArgs, jobs: usize) -> Result<()> {
    let labels = [
        LabelSpec::high_arousal(a.high_h),
        LabelSpec::low_arousal(a.low_h),
    ];
    let m = synth_corpus(&labels, a.speakers, a.seconds, a.seed, &a.out)?;
    config::write_sidecar(&a.out.join("synth.config"), "synth", a, jobs)?;
    println!(
        "wrote {} files and {}",
        m.entries.len(),
        a.out.join("manifest.csv").display()
    );
    Ok(())
}

fn train(a: &TrainArgs, jobs: usize) -> Result<()> {
    let mut pooled: Option<FeatureMatrix> = None;
    for p in &a.features {
        let fm = FeatureMatrix::read_csv(p)?;
        match pooled.as_mut() {
            None => pooled = Some(fm),
            Some(acc) => acc.extend_from(&fm)?,
        }
    }
    let data = pooled.ok_or_else(|| usage("no feature files given"))?;
    let model = train_alpha_gmm(&data, &a.label, &a.gmm.config(a.alpha, a.seed))?;
    create_parent(&a.out)?;
    model.write(&a.out)?;
    config::write_sidecar(&sidecar_path(&a.out), "train", a, jobs)
}

fn classify(a: &ClassifyArgs, jobs: usize) -> Result<()> {
    let data = FeatureMatrix::read_csv(&a.features)?;
    let models = a
        .models
        .iter()
        .map(AlphaGmmModel::read)
        .collect::<vocalprint::Result<Vec<_>>>()?;
    let result = classify_sequence(&data, &models)?;
    if result.tied {
        warn!("tied scores, picked {}", result.label);
    }
    let mut out = String::from("model,score,selected\n");
    for (label, score) in &result.scores {
        out.push_str(&format!(
            "{label},{score:.10e},{}\n",
            u8::from(*label == result.label)
        ));
    }
    create_parent(&a.out)?;
    fs::write(&a.out, out).with_context(|| format!("writing {}", a.out.display()))?;
    config::write_sidecar(&sidecar_path(&a.out), "classify", a, jobs)?;
    println!("{}", result.label);
    Ok(())
}

fn write_report(report: &EvalReport, dir: &Path) -> Result<()> {
    report.write(dir)?;
    if !report.warnings.is_empty() {
        fs::write(dir.join("warnings.txt"), report.warnings.join("\n") + "\n")?;
    }
    Ok(())
}

fn alpha_dir_name(alpha: f64) -> String {
    format!("alpha_{alpha}")
}

fn evaluate(a: &EvaluateArgs, jobs: usize) -> Result<()> {
    if a.alpha.is_empty() {
        return Err(usage("at least one alpha is needed"));
    }
    let manifest = CorpusManifest::read_csv(&a.manifest)
        .with_context(|| format!("reading {}", a.manifest.display()))?;
    let cfg = EvalConfig {
        features: FeatureConfig {
            mode: a.feature.into(),
            sift: a.sift.config(0),
            use_eemd: a.sift.method == Method::Eemd,
            ins: a.scale.ins_config(a.ins_full)?,
        },
        voicing: a.voicing.config(),
        train: a.gmm.config(a.alpha[0], 0),
        train_seconds: a.train_seconds,
        segment_ms: a.segment_ms,
        seed: a.seed,
    };
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    if a.alpha.len() == 1 {
        let report = eval::run_evaluation(&manifest, &cfg)?;
        write_report(&report, &a.out)?;
        print!("{}", report.confusion.summary_csv());
    } else {
        let reports = eval::run_alpha_sweep(&manifest, &cfg, &a.alpha)?;
        let mut sweep = String::from("alpha,average_pct,uar_pct\n");
        for r in &reports {
            write_report(r, &a.out.join(alpha_dir_name(r.alpha)))?;
            sweep.push_str(&format!(
                "{},{:.4},{:.4}\n",
                r.alpha,
                r.confusion.average(),
                r.confusion.uar()
            ));
        }
        fs::write(a.out.join("sweep.csv"), &sweep)?;
        print!("{sweep}");
    }
    config::write_sidecar(&a.out.join("run.config"), "evaluate", a, jobs)
}

fn run(cli: &Cli) -> Result<()> {
    let j = cli.jobs;
    match &cli.command {
        Command::Decompose(a) => decompose(a, j),
        Command::Hurst(a) => hurst(a, j),
        Command::Hhhc(a) => hhhc(a, j),
        Command::Ins(a) => ins(a, j),
        Command::Synth(a) => synth(a, j),
        Command::Train(a) => train(a, j),
        Command::Classify(a) => classify(a, j),
        Command::Evaluate(a) => evaluate(a, j),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 1;
    }
    match err.downcast_ref::<vocalprint::Error>() {
        Some(vocalprint::Error::InvalidArgument(_)) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let argv = match config::expand_config(std::env::args().collect(), SUBCOMMANDS) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();

    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match pool.install(|| run(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
