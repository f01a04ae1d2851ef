mod common;

use common::{mean, white, CirculantFgn};
use rand::Rng;
use vocalprint::hhhc::InsSummary;
use vocalprint::{compute_ins, extract_hhhc, extract_hhhc_ins, InsConfig, SiftConfig, Signal};

fn signal(x: Vec<f64>) -> Signal {
    Signal::new(x, 8000).unwrap()
}

fn sift(seed: u64) -> SiftConfig {
    SiftConfig {
        rng_seed: seed,
        ..SiftConfig::default()
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Differenced white noise switched on and off in random 10-50 ms bursts.
fn hf_bursts(n: usize, seed: u64) -> Vec<f64> {
    let w = white(n + 1, seed);
    let mut r = common::rng(seed ^ 0xb0);
    let mut out = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let len = r.random_range(80..400);
        if r.random_bool(0.4) {
            for k in i..(i + len).min(n) {
                out[k] = w[k + 1] - w[k];
            }
        }
        i += len;
    }
    out
}

/// fGn (H = 0.8) through a one-pole low-pass: a slowly wandering signal.
fn slow_drift(n: usize, seed: u64) -> Vec<f64> {
    let mut acc = 0.0;
    CirculantFgn::new(n, 0.8)
        .sample(seed)
        .into_iter()
        .map(|v| {
            acc = 0.99 * acc + v;
            acc
        })
        .collect()
}

#[test]
fn rows_and_determinism() {
    let sig = signal(white(6400, 1));
    let a = extract_hhhc(&sig, &sift(4), true).unwrap();
    let b = extract_hhhc(&sig, &sift(4), true).unwrap();
    assert_eq!(a.n_rows(), 19);
    assert_eq!(a, b);
    assert!(a.rows().iter().flatten().all(|h| *h > 0.0 && *h < 1.0));

    let ins = InsConfig {
        surrogates: 20,
        seed: 2,
        ..InsConfig::default()
    };
    let full = InsConfig {
        summary: InsSummary::Full,
        ..ins.clone()
    };
    let short = SiftConfig {
        ensemble_trials: 10,
        ..sift(4)
    };
    let m12 = extract_hhhc_ins(&sig, &short, true, &ins).unwrap();
    let m66 = extract_hhhc_ins(&sig, &short, true, &full).unwrap();
    assert_eq!((m12.dim(), m66.dim()), (12, 66));
    assert_eq!((m12.n_rows(), m66.n_rows()), (19, 19));
    assert!(m66.rows().iter().all(|r| r[6..].iter().all(|v| *v >= 0.0)));
    let plain = extract_hhhc(&sig, &short, true).unwrap();
    for (r, p) in m12.rows().iter().zip(plain.rows()) {
        assert_eq!(&r[..6], &p[..]);
    }
}

#[test]
fn white_noise_ins_medians_stay_near_threshold() {
    // Threshold calibrated on plain white noise of segment length.
    let scales = vocalprint::ins::default_scales();
    let gammas: Vec<f64> = scales
        .iter()
        .filter_map(|&s| {
            let g: Vec<f64> = (0..20)
                .filter_map(|k| compute_ins(&white(640, 700 + k), s, 50, k).ok())
                .map(|p| p.gamma)
                .collect();
            (!g.is_empty()).then(|| mean(&g))
        })
        .collect();
    let bound = 2.0 * gammas.iter().cloned().fold(f64::INFINITY, f64::min);

    let sig = signal(white(16000, 9));
    let cfg = SiftConfig {
        ensemble_trials: 20,
        ..sift(1)
    };
    let m = extract_hhhc_ins(&sig, &cfg, true, &InsConfig::default()).unwrap();
    let below = (6..12)
        .filter(|&j| {
            let mut col = m.column(j);
            col.sort_by(f64::total_cmp);
            col[col.len() / 2] < bound
        })
        .count();
    assert!(below >= 5, "{below}/6 INS medians below {bound}");
}

#[test]
fn burst_and_drift_are_separated() {
    let n = 80_000;
    let a = extract_hhhc(&signal(hf_bursts(n, 3)), &sift(1), true)
        .unwrap()
        .column_means();
    let b = extract_hhhc(&signal(slow_drift(n, 3)), &sift(1), true)
        .unwrap()
        .column_means();
    let d = distance(&a, &b);
    assert!(d > 0.3, "distance {d}: {a:?} vs {b:?}");
}

#[test]
#[ignore = "unattainable: smooth high-index modes pin H at 0.99, but the first mode of fGn sits near 0.27"]
fn persistent_fgn_keeps_every_column_high() {
    let x = CirculantFgn::new(16000, 0.8).sample(2);
    let m = extract_hhhc(&signal(x), &sift(1), true).unwrap();
    for (j, v) in m.column_means().iter().enumerate() {
        assert!(*v >= 0.55, "column {} mean {v}", j + 1);
    }
}
