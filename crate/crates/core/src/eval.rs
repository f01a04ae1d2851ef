//! Leave-one-speaker-out evaluation.
//!
//! Every manifest file is loaded, resampled to 8 kHz, reduced to its voiced
//! frames and cut into non-overlapping 800 ms chunks (a trailing remainder
//! is dropped). Features are computed once per chunk. In each fold, a
//! label's model is trained on chunks drawn at random, without replacement,
//! from the training speakers' pool until 32 s is reached; each chunk of the
//! held-out speaker is then classified on its own.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use log::warn;
use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::emd::SiftConfig;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::gmm::{classify_sequence, train_alpha_gmm, AlphaGmmModel, TrainConfig};
use crate::hhhc::{extract_hhhc, extract_hhhc_ins, InsConfig};
use crate::hurst::extract_ph;
use crate::rng::{derive_seed, stream_rng};
use crate::signal::{
    load_wav, resample_to_8k, select_voiced, CorpusManifest, Signal, VoicingConfig,
};

pub use crate::synth::{synth_corpus, LabelSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureMode {
    Hhhc,
    HhhcIns,
    Ph,
}

impl fmt::Display for FeatureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureMode::Hhhc => "hhhc",
            FeatureMode::HhhcIns => "hhhc+ins",
            FeatureMode::Ph => "ph",
        })
    }
}

impl FromStr for FeatureMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hhhc" => Ok(FeatureMode::Hhhc),
            "hhhc+ins" | "hhhc-ins" => Ok(FeatureMode::HhhcIns),
            "ph" => Ok(FeatureMode::Ph),
            other => Err(Error::InvalidArgument(format!(
                "unknown feature mode {other}"
            ))),
        }
    }
}

/// Feature extraction settings shared by training and classification.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureConfig {
    pub mode: FeatureMode,
    pub sift: SiftConfig,
    pub use_eemd: bool,
    pub ins: InsConfig,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            mode: FeatureMode::Hhhc,
            sift: SiftConfig::default(),
            use_eemd: true,
            ins: InsConfig::default(),
        }
    }
}

impl FeatureConfig {
    /// Features of one chunk; all randomness is keyed by `seed`.
    pub fn extract(&self, signal: &Signal, seed: u64) -> Result<FeatureMatrix> {
        let sift = SiftConfig {
            rng_seed: derive_seed(seed, &[0]),
            ..self.sift.clone()
        };
        match self.mode {
            FeatureMode::Hhhc => extract_hhhc(signal, &sift, self.use_eemd),
            FeatureMode::HhhcIns => {
                let ins = InsConfig {
                    seed: derive_seed(seed, &[1]),
                    ..self.ins.clone()
                };
                extract_hhhc_ins(signal, &sift, self.use_eemd, &ins)
            }
            FeatureMode::Ph => extract_ph(signal),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub features: FeatureConfig,
    pub voicing: VoicingConfig,
    pub train: TrainConfig,
    pub train_seconds: f64,
    pub segment_ms: f64,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            features: FeatureConfig::default(),
            voicing: VoicingConfig::default(),
            train: TrainConfig::default(),
            train_seconds: 32.0,
            segment_ms: 800.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub test_speaker: String,
    /// Manifest indices of the training files.
    pub train: Vec<usize>,
    /// Manifest indices of the held-out speaker's files.
    pub test: Vec<usize>,
}

/// One fold per speaker (in sorted speaker order).
pub fn build_loso_folds(manifest: &CorpusManifest) -> Result<Vec<Fold>> {
    let speakers = manifest.speakers();
    if speakers.len() < 2 {
        return Err(Error::Manifest(
            "leave-one-speaker-out needs at least two speakers".into(),
        ));
    }
    Ok(speakers
        .into_iter()
        .map(|spk| {
            let (test, train): (Vec<usize>, Vec<usize>) =
                (0..manifest.entries.len()).partition(|&i| manifest.entries[i].speaker == spk);
            Fold {
                test_speaker: spk,
                train,
                test,
            }
        })
        .collect())
}

/// Rows are actual labels, columns classified labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn new(labels: Vec<String>) -> Self {
        let n = labels.len();
        Self {
            labels,
            counts: vec![vec![0; n]; n],
        }
    }

    fn index(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown label {label}")))
    }

    pub fn record(&mut self, actual: &str, predicted: &str) -> Result<()> {
        let (a, p) = (self.index(actual)?, self.index(predicted)?);
        self.counts[a][p] += 1;
        Ok(())
    }

    pub fn add(&mut self, other: &ConfusionMatrix) {
        for (row, orow) in self.counts.iter_mut().zip(&other.counts) {
            row.iter_mut().zip(orow).for_each(|(a, b)| *a += b);
        }
    }

    pub fn row_totals(&self) -> Vec<usize> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    /// Percentage of each actual class classified correctly; classes that
    /// were never tested are NaN.
    pub fn per_class_accuracy(&self) -> Vec<f64> {
        self.counts
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let total: usize = r.iter().sum();
                if total == 0 {
                    f64::NAN
                } else {
                    100.0 * r[i] as f64 / total as f64
                }
            })
            .collect()
    }

    /// Unweighted mean of the per-class accuracies over tested classes.
    pub fn average(&self) -> f64 {
        let acc: Vec<f64> = self
            .per_class_accuracy()
            .into_iter()
            .filter(|a| !a.is_nan())
            .collect();
        if acc.is_empty() {
            return f64::NAN;
        }
        acc.iter().sum::<f64>() / acc.len() as f64
    }

    /// Unweighted average recall; identical to [`Self::average`].
    pub fn uar(&self) -> f64 {
        self.average()
    }

    pub fn total(&self) -> usize {
        self.row_totals().iter().sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("actual,{}\n", self.labels.join(","));
        for (l, row) in self.labels.iter().zip(&self.counts) {
            let cells: Vec<String> = row.iter().map(usize::to_string).collect();
            out.push_str(&format!("{l},{}\n", cells.join(",")));
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from("class,accuracy_pct\n");
        for (l, a) in self.labels.iter().zip(self.per_class_accuracy()) {
            out.push_str(&format!("{l},{a:.4}\n"));
        }
        out.push_str(&format!("average,{:.4}\n", self.average()));
        out.push_str(&format!("uar,{:.4}\n", self.uar()));
        out
    }
}

/// Features of the voiced 800 ms chunks of every manifest file.
#[derive(Debug, Clone)]
pub struct PreparedCorpus {
    pub labels: Vec<String>,
    /// chunks[file][chunk]
    pub chunks: Vec<Vec<FeatureMatrix>>,
    pub warnings: Vec<String>,
}

impl PreparedCorpus {
    pub fn n_chunks(&self) -> usize {
        self.chunks.iter().map(Vec::len).sum()
    }
}

/// Load, resample and voice-select one file, then cut it into chunks of
/// `segment_ms`.
pub fn voiced_chunks(path: &Path, voicing: &VoicingConfig, segment_ms: f64) -> Result<Vec<Signal>> {
    let sig = resample_to_8k(&load_wav(path)?)?;
    let voiced = select_voiced(&sig, voicing)?;
    let len = voiced.samples_for_ms(segment_ms);
    voiced
        .samples()
        .chunks_exact(len)
        .map(|c| Signal::new(c.to_vec(), voiced.sample_rate_hz()))
        .collect()
}

/// Extract chunk features for the whole manifest. Chunk `c` of file `f` uses
/// seed `derive_seed(cfg.seed, [f, c])`. Files without voiced frames are
/// skipped with a warning.
pub fn prepare_corpus(manifest: &CorpusManifest, cfg: &EvalConfig) -> Result<PreparedCorpus> {
    let mut warnings = Vec::new();
    let mut signals = Vec::with_capacity(manifest.entries.len());
    for e in &manifest.entries {
        match voiced_chunks(&e.path, &cfg.voicing, cfg.segment_ms) {
            Ok(c) => signals.push(c),
            Err(Error::NoVoicedFrames) => {
                let w = format!("{}: no voiced frames, file skipped", e.path.display());
                warn!("{w}");
                warnings.push(w);
                signals.push(Vec::new());
            }
            Err(err) => return Err(err),
        }
    }
    let jobs: Vec<(usize, usize)> = signals
        .iter()
        .enumerate()
        .flat_map(|(f, cs)| (0..cs.len()).map(move |c| (f, c)))
        .collect();
    let feats = jobs
        .par_iter()
        .map(|&(f, c)| {
            cfg.features
                .extract(&signals[f][c], derive_seed(cfg.seed, &[f as u64, c as u64]))
                .map(|mut m| {
                    m.source_id =
                        format!("{}#{c};{}", manifest.entries[f].path.display(), m.source_id);
                    m
                })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut chunks: Vec<Vec<FeatureMatrix>> = signals
        .iter()
        .map(|s| Vec::with_capacity(s.len()))
        .collect();
    for ((f, _), m) in jobs.into_iter().zip(feats) {
        chunks[f].push(m);
    }
    Ok(PreparedCorpus {
        labels: manifest.labels(),
        chunks,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldReport {
    pub fold: usize,
    pub test_speaker: String,
    pub n_test: usize,
    pub n_correct: usize,
    /// Seconds of audio used to train each label's model.
    pub train_seconds: Vec<(String, f64)>,
    pub confusion: ConfusionMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub fold: usize,
    pub segment: String,
    pub actual: String,
    pub predicted: String,
    pub scores: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub alpha: f64,
    pub confusion: ConfusionMatrix,
    pub folds: Vec<FoldReport>,
    pub scores: Vec<ScoreRow>,
    pub warnings: Vec<String>,
}

impl EvalReport {
    pub fn per_fold_csv(&self) -> String {
        let mut out =
            String::from("fold,test_speaker,n_test,n_correct,accuracy_pct,train_seconds\n");
        for f in &self.folds {
            let acc = if f.n_test == 0 {
                f64::NAN
            } else {
                100.0 * f.n_correct as f64 / f.n_test as f64
            };
            let secs: Vec<String> = f
                .train_seconds
                .iter()
                .map(|(l, s)| format!("{l}={s:.1}"))
                .collect();
            out.push_str(&format!(
                "{},{},{},{},{acc:.4},{}\n",
                f.fold,
                f.test_speaker,
                f.n_test,
                f.n_correct,
                secs.join(";")
            ));
        }
        out
    }

    /// Long format: one line per (segment, model).
    pub fn scores_csv(&self) -> String {
        let mut out = String::from("fold,segment,actual,predicted,model,score\n");
        for r in &self.scores {
            for (model, s) in &r.scores {
                out.push_str(&format!(
                    "{},{},{},{},{model},{s:.10e}\n",
                    r.fold, r.segment, r.actual, r.predicted
                ));
            }
        }
        out
    }

    /// Write confusion.csv, summary.csv, per_fold.csv and scores.csv.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("confusion.csv"), self.confusion.to_csv())?;
        std::fs::write(dir.join("summary.csv"), self.confusion.summary_csv())?;
        std::fs::write(dir.join("per_fold.csv"), self.per_fold_csv())?;
        std::fs::write(dir.join("scores.csv"), self.scores_csv())?;
        Ok(())
    }
}

fn concat(chunks: &[&FeatureMatrix]) -> Result<FeatureMatrix> {
    let mut out = FeatureMatrix::empty(chunks[0].schema().to_vec(), "train-pool")?;
    for c in chunks {
        out.extend_from(c)?;
    }
    Ok(out)
}

/// Run all folds on already extracted features.
pub fn evaluate_prepared(
    manifest: &CorpusManifest,
    prepared: &PreparedCorpus,
    cfg: &EvalConfig,
) -> Result<EvalReport> {
    let labels = prepared.labels.clone();
    if labels.len() < 2 {
        return Err(Error::Manifest(
            "classification needs at least two labels".into(),
        ));
    }
    let folds = build_loso_folds(manifest)?;
    let segment_secs = cfg.segment_ms / 1000.0;
    let wanted = (cfg.train_seconds / segment_secs).round().max(1.0) as usize;

    let results = folds
        .par_iter()
        .enumerate()
        .map(|(k, fold)| -> Result<(FoldReport, Vec<ScoreRow>, Vec<String>)> {
            let mut warnings = Vec::new();
            let mut models: Vec<AlphaGmmModel> = Vec::new();
            let mut train_seconds = Vec::new();
            for (li, label) in labels.iter().enumerate() {
                let mut pool: Vec<&FeatureMatrix> = fold
                    .train
                    .iter()
                    .filter(|&&f| manifest.entries[f].label == *label)
                    .flat_map(|&f| prepared.chunks[f].iter())
                    .collect();
                pool.shuffle(&mut stream_rng(derive_seed(cfg.seed, &[k as u64, li as u64]), 0));
                if pool.len() < wanted {
                    let w = format!(
                        "fold {k} ({}): label {label} has {:.1} s of voiced training audio, short of {:.1} s",
                        fold.test_speaker,
                        pool.len() as f64 * segment_secs,
                        cfg.train_seconds
                    );
                    warn!("{w}");
                    warnings.push(w);
                }
                pool.truncate(wanted);
                train_seconds.push((label.clone(), pool.len() as f64 * segment_secs));
                if pool.is_empty() {
                    continue;
                }
                let data = concat(&pool)?;
                let mut tcfg = TrainConfig {
                    seed: derive_seed(cfg.seed, &[1000 + k as u64, li as u64]),
                    ..cfg.train.clone()
                };
                if data.n_rows() < 2 * tcfg.mixtures {
                    let reduced = (data.n_rows() / 2).max(1);
                    let w = format!(
                        "fold {k}: label {label} has {} rows; using {reduced} mixtures instead of {}",
                        data.n_rows(),
                        tcfg.mixtures
                    );
                    warn!("{w}");
                    warnings.push(w);
                    tcfg.mixtures = reduced;
                    if data.n_rows() < 2 {
                        continue;
                    }
                }
                models.push(train_alpha_gmm(&data, label, &tcfg)?);
            }
            if models.is_empty() {
                return Err(Error::InvalidArgument(format!("fold {k}: no model could be trained")));
            }

            let mut confusion = ConfusionMatrix::new(labels.clone());
            let mut scores = Vec::new();
            for &f in &fold.test {
                let actual = &manifest.entries[f].label;
                for (c, chunk) in prepared.chunks[f].iter().enumerate() {
                    let result = classify_sequence(chunk, &models)?;
                    confusion.record(actual, &result.label)?;
                    scores.push(ScoreRow {
                        fold: k,
                        segment: format!("{}#{c}", manifest.entries[f].path.display()),
                        actual: actual.clone(),
                        predicted: result.label,
                        scores: result.scores,
                    });
                }
            }
            let n_test = confusion.total();
            let n_correct = (0..labels.len()).map(|i| confusion.counts[i][i]).sum();
            Ok((
                FoldReport {
                    fold: k,
                    test_speaker: fold.test_speaker.clone(),
                    n_test,
                    n_correct,
                    train_seconds,
                    confusion,
                },
                scores,
                warnings,
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut confusion = ConfusionMatrix::new(labels);
    let mut fold_reports = Vec::new();
    let mut scores = Vec::new();
    let mut warnings = prepared.warnings.clone();
    for (fr, s, w) in results {
        confusion.add(&fr.confusion);
        fold_reports.push(fr);
        scores.extend(s);
        warnings.extend(w);
    }
    Ok(EvalReport {
        alpha: cfg.train.alpha,
        confusion,
        folds: fold_reports,
        scores,
        warnings,
    })
}

fn check_manifest(manifest: &CorpusManifest) -> Result<()> {
    let labels: BTreeSet<_> = manifest.entries.iter().map(|e| &e.label).collect();
    if labels.len() < 2 {
        return Err(Error::Manifest(
            "classification needs at least two labels".into(),
        ));
    }
    Ok(())
}

/// Extract features and run the leave-one-speaker-out protocol.
pub fn run_evaluation(manifest: &CorpusManifest, cfg: &EvalConfig) -> Result<EvalReport> {
    check_manifest(manifest)?;
    build_loso_folds(manifest)?;
    let prepared = prepare_corpus(manifest, cfg)?;
    evaluate_prepared(manifest, &prepared, cfg)
}

/// One evaluation per alpha, sharing the extracted features.
pub fn run_alpha_sweep(
    manifest: &CorpusManifest,
    cfg: &EvalConfig,
    alphas: &[f64],
) -> Result<Vec<EvalReport>> {
    check_manifest(manifest)?;
    build_loso_folds(manifest)?;
    let prepared = prepare_corpus(manifest, cfg)?;
    alphas
        .iter()
        .map(|&a| {
            let c = EvalConfig {
                train: TrainConfig {
                    alpha: a,
                    ..cfg.train.clone()
                },
                ..cfg.clone()
            };
            evaluate_prepared(manifest, &prepared, &c)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::ManifestEntry;
    use std::path::PathBuf;

    fn manifest(speakers: usize, labels: &[&str]) -> CorpusManifest {
        let mut e = Vec::new();
        for s in 0..speakers {
            for l in labels {
                e.push(ManifestEntry {
                    path: PathBuf::from(format!("s{s}_{l}.wav")),
                    label: l.to_string(),
                    speaker: format!("s{s}"),
                });
            }
        }
        CorpusManifest::new(e).unwrap()
    }

    #[test]
    fn ten_speakers_ten_folds() {
        let m = manifest(10, &["a", "b"]);
        let folds = build_loso_folds(&m).unwrap();
        assert_eq!(folds.len(), 10);
        for f in &folds {
            let train_spk: BTreeSet<_> = f.train.iter().map(|&i| &m.entries[i].speaker).collect();
            assert_eq!(train_spk.len(), 9);
            assert!(!train_spk.contains(&f.test_speaker));
            assert!(f
                .test
                .iter()
                .all(|&i| m.entries[i].speaker == f.test_speaker));
        }
    }

    #[test]
    fn minimal_and_degenerate_fold_counts() {
        assert_eq!(build_loso_folds(&manifest(2, &["a"])).unwrap().len(), 2);
        assert!(build_loso_folds(&manifest(1, &["a", "b"])).is_err());
    }

    #[test]
    fn confusion_arithmetic() {
        let mut c = ConfusionMatrix::new(vec!["ang".into(), "sad".into()]);
        for _ in 0..8 {
            c.record("ang", "ang").unwrap();
        }
        for _ in 0..2 {
            c.record("ang", "sad").unwrap();
        }
        for _ in 0..3 {
            c.record("sad", "ang").unwrap();
        }
        c.record("sad", "sad").unwrap();
        assert_eq!(c.row_totals(), vec![10, 4]);
        assert_eq!(c.per_class_accuracy(), vec![80.0, 25.0]);
        assert_eq!(c.average(), 52.5);
        assert_eq!(c.uar(), c.average());
        assert!(c.record("joy", "ang").is_err());
        assert_eq!(c.to_csv(), "actual,ang,sad\nang,8,2\nsad,3,1\n");
        assert!(c.summary_csv().contains("average,52.5000"));
    }

    #[test]
    fn feature_mode_parsing() {
        assert_eq!(
            "hhhc+ins".parse::<FeatureMode>().unwrap(),
            FeatureMode::HhhcIns
        );
        assert_eq!(FeatureMode::Ph.to_string(), "ph");
        assert!("mfcc".parse::<FeatureMode>().is_err());
    }
}
