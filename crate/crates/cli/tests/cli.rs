use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_vocalprint"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn vocalprint")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Two-speaker corpus of short files.
fn corpus(dir: &Path, seconds: &str) -> PathBuf {
    let c = dir.join("corpus");
    ok(&[
        "synth",
        "--out",
        s(&c),
        "--speakers",
        "2",
        "--seconds",
        seconds,
        "--seed",
        "3",
    ]);
    c
}

#[test]
fn hhhc_is_deterministic_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let c = corpus(dir.path(), "1");
    let wav = c.join("spk01_high_arousal.wav");
    let base = ["hhhc", "--in", s(&wav), "--seed", "7", "--trials", "5"];
    let outs: Vec<PathBuf> = ["a.csv", "b.csv", "c.csv"]
        .iter()
        .map(|f| dir.path().join(f))
        .collect();
    ok(&[&base[..], &["--out", s(&outs[0])]].concat());
    ok(&[&base[..], &["--out", s(&outs[1]), "--jobs", "1"]].concat());
    ok(&[&base[..], &["--out", s(&outs[2]), "--jobs", "3"]].concat());
    let a = fs::read_to_string(&outs[0]).unwrap();
    assert!(a.starts_with("H_imf1,H_imf2,H_imf3,H_imf4,H_imf5,H_imf6"));
    assert_eq!(a.lines().count(), 1 + 24);
    assert_eq!(a, fs::read_to_string(&outs[1]).unwrap());
    assert_eq!(a, fs::read_to_string(&outs[2]).unwrap());

    let sidecar = fs::read_to_string(dir.path().join("a.csv.config")).unwrap();
    assert!(sidecar.lines().any(|l| l == "seed = 7"), "{sidecar}");
    assert!(sidecar.lines().any(|l| l == "trials = 5"));
}

#[test]
fn sidecar_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let c = corpus(dir.path(), "1");
    let first = dir.path().join("first.csv");
    let again = dir.path().join("again.csv");
    ok(&[
        "hhhc",
        "--in",
        s(&c.join("spk02_low_arousal.wav")),
        "--out",
        s(&first),
        "--seed",
        "11",
        "--trials",
        "4",
        "--ins",
        "--surrogates",
        "10",
    ]);
    let sidecar = dir.path().join("first.csv.config");
    ok(&["hhhc", "--config", s(&sidecar), "--out", s(&again)]);
    assert_eq!(
        fs::read_to_string(first).unwrap(),
        fs::read_to_string(again).unwrap()
    );
}

#[test]
fn command_line_overrides_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let c = corpus(dir.path(), "1");
    let wav = c.join("spk01_low_arousal.wav");
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        format!("# test\nin = {}\ntrials = 3\nseed = 1\n", s(&wav)),
    )
    .unwrap();
    let via_cfg = dir.path().join("via.csv");
    let direct = dir.path().join("direct.csv");
    let other = dir.path().join("other.csv");
    ok(&[
        "hhhc",
        "--config",
        s(&cfg),
        "--seed",
        "9",
        "--out",
        s(&via_cfg),
    ]);
    ok(&[
        "hhhc",
        "--in",
        s(&wav),
        "--trials",
        "3",
        "--seed",
        "9",
        "--out",
        s(&direct),
    ]);
    ok(&[
        "hhhc",
        "--in",
        s(&wav),
        "--trials",
        "3",
        "--seed",
        "1",
        "--out",
        s(&other),
    ]);
    let v = fs::read_to_string(via_cfg).unwrap();
    assert_eq!(v, fs::read_to_string(direct).unwrap());
    assert_ne!(v, fs::read_to_string(other).unwrap());
}

#[test]
fn ins_reports_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let c = corpus(dir.path(), "1");
    let out = dir.path().join("ins.csv");
    ok(&[
        "ins",
        "--in",
        s(&c.join("spk01_high_arousal.wav")),
        "--out",
        s(&out),
        "--surrogates",
        "20",
    ]);
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next().unwrap(), "scale,ins,gamma,verdict");
    assert_eq!(text.lines().count(), 11);
    let verdicts = ["stationary", "non-stationary", "untestable", "infeasible"];
    assert!(text
        .lines()
        .skip(1)
        .all(|l| verdicts.contains(&l.rsplit(',').next().unwrap())));

    let per_imf = dir.path().join("ins_imf.csv");
    ok(&[
        "ins",
        "--in",
        s(&c.join("spk01_high_arousal.wav")),
        "--out",
        s(&per_imf),
        "--surrogates",
        "10",
        "--imfs",
        "--method",
        "emd",
    ]);
    let text = fs::read_to_string(per_imf).unwrap();
    assert_eq!(text.lines().next().unwrap(), "imf,scale,ins,gamma,verdict");
    assert_eq!(text.lines().count(), 1 + 60);
}

#[test]
fn decompose_and_hurst_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let c = corpus(dir.path(), "1");
    let wav = c.join("spk01_high_arousal.wav");
    let imfs = dir.path().join("imfs.csv");
    ok(&[
        "decompose",
        "--in",
        s(&wav),
        "--out",
        s(&imfs),
        "--method",
        "emd",
    ]);
    let text = fs::read_to_string(imfs).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "t,imf1,imf2,imf3,imf4,imf5,imf6,residual"
    );
    assert_eq!(text.lines().count(), 1 + 8000);
    let ph = dir.path().join("ph.csv");
    ok(&["hurst", "--in", s(&wav), "--out", s(&ph)]);
    let text = fs::read_to_string(ph).unwrap();
    assert_eq!(text.lines().next().unwrap(), "pH");
    assert_eq!(text.lines().count(), 1 + 96);
}

#[test]
fn train_then_classify() {
    let dir = tempfile::tempdir().unwrap();
    let c = corpus(dir.path(), "3");
    let mut models = Vec::new();
    for label in ["high_arousal", "low_arousal"] {
        let feats = dir.path().join(format!("{label}.csv"));
        ok(&[
            "hurst",
            "--in",
            s(&c.join(format!("spk01_{label}.wav"))),
            "--out",
            s(&feats),
        ]);
        let model = dir.path().join(format!("{label}.gmm"));
        ok(&[
            "train",
            "--features",
            s(&feats),
            "--label",
            label,
            "--out",
            s(&model),
            "--alpha",
            "-2",
            "--mixtures",
            "4",
        ]);
        models.push(model);
    }
    let test = dir.path().join("test.csv");
    ok(&[
        "hurst",
        "--in",
        s(&c.join("spk02_low_arousal.wav")),
        "--out",
        s(&test),
    ]);
    let scores = dir.path().join("scores.csv");
    let joined = format!("{},{}", s(&models[0]), s(&models[1]));
    let out = ok(&[
        "classify",
        "--features",
        s(&test),
        "--models",
        &joined,
        "--out",
        s(&scores),
    ]);
    let label = String::from_utf8(out.stdout).unwrap();
    assert!(["high_arousal", "low_arousal"].contains(&label.trim()));
    let text = fs::read_to_string(scores).unwrap();
    assert_eq!(text.lines().next().unwrap(), "model,score,selected");
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn evaluate_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let c = corpus(dir.path(), "6");
    let out = dir.path().join("eval");
    ok(&[
        "evaluate",
        "--manifest",
        s(&c.join("manifest.csv")),
        "--feature",
        "ph",
        "--mixtures",
        "4",
        "--train-seconds",
        "2",
        "--out",
        s(&out),
        "--seed",
        "1",
    ]);
    let confusion = fs::read_to_string(out.join("confusion.csv")).unwrap();
    assert_eq!(
        confusion.lines().next().unwrap(),
        "actual,high_arousal,low_arousal"
    );
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert!(summary.starts_with("class,accuracy_pct\n"));
    assert!(summary.lines().any(|l| l.starts_with("average,")));
    assert!(out.join("per_fold.csv").exists());
    assert!(out.join("run.config").exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let missing = dir.path().join("missing.wav");
    // unknown flag: usage error
    assert_eq!(run(&["hhhc", "--bogus"]).status.code(), Some(1));
    // unreadable input: runtime failure
    let r = run(&["hurst", "--in", s(&missing), "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("missing.wav"));
    // alpha outside the admissible range: invalid argument
    let c = corpus(dir.path(), "1");
    let feats = dir.path().join("f.csv");
    ok(&[
        "hurst",
        "--in",
        s(&c.join("spk01_low_arousal.wav")),
        "--out",
        s(&feats),
    ]);
    let r = run(&[
        "train",
        "--features",
        s(&feats),
        "--label",
        "a",
        "--out",
        s(&out),
        "--alpha",
        "0.5",
        "--mixtures",
        "2",
    ]);
    assert_eq!(r.status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}
