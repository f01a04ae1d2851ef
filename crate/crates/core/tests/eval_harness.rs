use std::collections::BTreeMap;
use std::fs;

use vocalprint::eval::{
    build_loso_folds, run_evaluation, synth_corpus, EvalConfig, FeatureConfig, FeatureMode,
    LabelSpec,
};
use vocalprint::signal::CorpusManifest;
use vocalprint::{
    classify_sequence, extract_ph, load_wav, train_alpha_gmm, SiftConfig, TrainConfig,
};

fn labels(high: f64, low: f64) -> Vec<LabelSpec> {
    vec![LabelSpec::high_arousal(high), LabelSpec::low_arousal(low)]
}

fn quick_cfg(mode: FeatureMode) -> EvalConfig {
    EvalConfig {
        features: FeatureConfig {
            mode,
            sift: SiftConfig {
                ensemble_trials: 1,
                noise_std: 0.0,
                ..SiftConfig::default()
            },
            use_eemd: false,
            ..FeatureConfig::default()
        },
        train: TrainConfig {
            mixtures: 4,
            alpha: -4.0,
            ..TrainConfig::default()
        },
        train_seconds: 8.0,
        seed: 5,
        ..EvalConfig::default()
    }
}

#[test]
fn synth_bookkeeping_and_determinism() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let m = synth_corpus(&labels(0.3, 0.8), 4, 60.0, 11, a.path()).unwrap();
    synth_corpus(&labels(0.3, 0.8), 4, 60.0, 11, b.path()).unwrap();
    assert_eq!(m.entries.len(), 8);
    let reread = CorpusManifest::read_csv(a.path().join("manifest.csv")).unwrap();
    assert_eq!(reread.entries.len(), 8);
    for e in &m.entries {
        let name = e.path.file_name().unwrap();
        assert_eq!(
            fs::read(&e.path).unwrap(),
            fs::read(b.path().join(name)).unwrap()
        );
    }
}

#[test]
fn high_arousal_has_lower_ph() {
    let dir = tempfile::tempdir().unwrap();
    let m = synth_corpus(&labels(0.3, 0.8), 2, 10.0, 3, dir.path()).unwrap();
    let mut by_label: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for e in &m.entries {
        let ph = extract_ph(&load_wav(&e.path).unwrap())
            .unwrap()
            .column_means()[0];
        by_label.entry(e.label.clone()).or_default().push(ph);
    }
    let mean = |v: &Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
    let high = mean(&by_label["high_arousal"]);
    let low = mean(&by_label["low_arousal"]);
    assert!(high < low, "high-arousal pH {high} vs low-arousal {low}");
}

#[test]
fn folds_never_leak_speakers() {
    let dir = tempfile::tempdir().unwrap();
    let m = synth_corpus(&labels(0.3, 0.8), 5, 1.0, 1, dir.path()).unwrap();
    let folds = build_loso_folds(&m).unwrap();
    assert_eq!(folds.len(), 5);
    for f in &folds {
        assert!(f
            .test
            .iter()
            .all(|&i| m.entries[i].speaker == f.test_speaker));
        assert!(f
            .train
            .iter()
            .all(|&i| m.entries[i].speaker != f.test_speaker));
        assert_eq!(f.train.len() + f.test.len(), m.entries.len());
    }
}

#[test]
fn evaluation_is_deterministic_and_rows_are_conserved() {
    let dir = tempfile::tempdir().unwrap();
    let m = synth_corpus(&labels(0.3, 0.8), 3, 12.0, 7, dir.path()).unwrap();
    let ph = run_evaluation(&m, &quick_cfg(FeatureMode::Ph)).unwrap();
    let again = run_evaluation(&m, &quick_cfg(FeatureMode::Ph)).unwrap();
    assert_eq!(ph.confusion, again.confusion);
    assert_eq!(ph.scores_csv(), again.scores_csv());
    let hhhc = run_evaluation(&m, &quick_cfg(FeatureMode::Hhhc)).unwrap();
    assert_eq!(ph.confusion.row_totals(), hhhc.confusion.row_totals());
    assert!(ph.confusion.total() > 0);
    let out = tempfile::tempdir().unwrap();
    hhhc.write(out.path()).unwrap();
    let confusion = fs::read_to_string(out.path().join("confusion.csv")).unwrap();
    assert_eq!(
        confusion.lines().next().unwrap(),
        "actual,high_arousal,low_arousal"
    );
    assert_eq!(confusion.lines().count(), 3);
    for f in ["summary.csv", "per_fold.csv", "scores.csv"] {
        assert!(out.path().join(f).exists(), "{f} missing");
    }
}

#[test]
fn shortfall_is_reported_and_run_proceeds() {
    let dir = tempfile::tempdir().unwrap();
    let m = synth_corpus(&labels(0.3, 0.8), 2, 6.0, 2, dir.path()).unwrap();
    let cfg = EvalConfig {
        train_seconds: 32.0,
        ..quick_cfg(FeatureMode::Ph)
    };
    let report = run_evaluation(&m, &cfg).unwrap();
    assert!(
        report.warnings.iter().any(|w| w.contains("32")),
        "{:?}",
        report.warnings
    );
    assert!(report.confusion.total() > 0);
}

#[test]
fn identical_single_label_data_is_recognized() {
    let dir = tempfile::tempdir().unwrap();
    let m = synth_corpus(&labels(0.3, 0.8), 1, 4.0, 9, dir.path()).unwrap();
    let feats = extract_ph(&load_wav(&m.entries[0].path).unwrap()).unwrap();
    let cfg = TrainConfig {
        mixtures: 4,
        ..TrainConfig::default()
    };
    let model = train_alpha_gmm(&feats, &m.entries[0].label, &cfg).unwrap();
    let c = classify_sequence(&feats, &[model]).unwrap();
    assert_eq!(c.label, m.entries[0].label);
}

#[test]
fn wider_separation_does_not_hurt() {
    let narrow_dir = tempfile::tempdir().unwrap();
    let wide_dir = tempfile::tempdir().unwrap();
    let narrow = synth_corpus(&labels(0.5, 0.6), 3, 20.0, 4, narrow_dir.path()).unwrap();
    let wide = synth_corpus(&labels(0.3, 0.8), 3, 20.0, 4, wide_dir.path()).unwrap();
    let cfg = quick_cfg(FeatureMode::Hhhc);
    let a = run_evaluation(&narrow, &cfg).unwrap().confusion.average();
    let b = run_evaluation(&wide, &cfg).unwrap().confusion.average();
    assert!(b >= a, "gap 0.5 average {b} below gap 0.1 average {a}");
}
