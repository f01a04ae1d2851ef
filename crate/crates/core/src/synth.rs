//! Synthetic signal generators: fractional Gaussian noise by circulant
//! embedding, and a labeled pseudo-speaker corpus built on top of it.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream_rng};
use crate::signal::{write_wav_16bit, CorpusManifest, ManifestEntry, Signal};
use crate::TARGET_RATE_HZ;

/// Autocovariance of unit-variance fractional Gaussian noise at lag k.
pub fn fgn_autocovariance(h: f64, k: usize) -> f64 {
    let k = k as f64;
    let e = 2.0 * h;
    0.5 * ((k + 1.0).powf(e) - 2.0 * k.powf(e) + (k - 1.0).abs().powf(e))
}

/// Unit-variance fractional Gaussian noise of length `n` and Hurst index
/// `h` in (0, 1), by Davies-Harte circulant embedding.
pub fn fgn<R: Rng + ?Sized>(n: usize, h: f64, rng: &mut R) -> Vec<f64> {
    assert!(h > 0.0 && h < 1.0, "Hurst index must lie in (0, 1)");
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![rng.sample(StandardNormal)];
    }
    let m = 2 * n;
    let mut row: Vec<Complex<f64>> = (0..m)
        .map(|i| {
            let lag = if i <= n { i } else { m - i };
            Complex::new(fgn_autocovariance(h, lag), 0.0)
        })
        .collect();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(m);
    fft.process(&mut row);
    // eigenvalues of the circulant embedding; non-negative for fGn
    let lambda: Vec<f64> = row.iter().map(|c| c.re.max(0.0)).collect();

    let mut w = vec![Complex::new(0.0, 0.0); m];
    w[0] = Complex::new(lambda[0].sqrt() * rng.sample::<f64, _>(StandardNormal), 0.0);
    w[n] = Complex::new(lambda[n].sqrt() * rng.sample::<f64, _>(StandardNormal), 0.0);
    for k in 1..n {
        let a: f64 = rng.sample(StandardNormal);
        let b: f64 = rng.sample(StandardNormal);
        let s = (lambda[k] / 2.0).sqrt();
        w[k] = Complex::new(s * a, s * b);
        w[m - k] = w[k].conj();
    }
    fft.process(&mut w);
    let norm = 1.0 / (m as f64).sqrt();
    w[..n].iter().map(|c| c.re * norm).collect()
}

/// Generative recipe for one synthetic emotion class.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelSpec {
    pub name: String,
    /// Hurst index of the fGn carrier.
    pub hurst: f64,
    /// Amplitude-modulation rate (Hz) and depth in [0, 1).
    pub am_rate_hz: f64,
    pub am_depth: f64,
    /// Additive tones as (frequency Hz, amplitude relative to carrier std).
    pub tones: Vec<(f64, f64)>,
}

impl LabelSpec {
    /// Fast, deep modulation on an anti-persistent carrier.
    pub fn high_arousal(hurst: f64) -> Self {
        Self {
            name: "high_arousal".into(),
            hurst,
            am_rate_hz: 6.0,
            am_depth: 0.7,
            tones: vec![(240.0, 0.15), (610.0, 0.1)],
        }
    }

    /// Slow, shallow modulation on a persistent carrier.
    pub fn low_arousal(hurst: f64) -> Self {
        Self {
            name: "low_arousal".into(),
            hurst,
            am_rate_hz: 2.0,
            am_depth: 0.3,
            tones: vec![(120.0, 0.15)],
        }
    }
}

/// Render one file of `label` for a pseudo-speaker. Speaker variability is a
/// random gain and a first-order spectral tilt drawn from `speaker_seed`.
pub fn render_label_signal(
    spec: &LabelSpec,
    seconds: f64,
    speaker_seed: u64,
    content_seed: u64,
) -> Result<Signal> {
    if !(spec.hurst > 0.0 && spec.hurst < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "label {}: hurst must lie in (0, 1)",
            spec.name
        )));
    }
    let n = (seconds * TARGET_RATE_HZ as f64).round() as usize;
    if n == 0 {
        return Err(Error::InvalidArgument(
            "seconds_per_label must be positive".into(),
        ));
    }
    let rate = TARGET_RATE_HZ as f64;
    let mut srng = stream_rng(speaker_seed, 0);
    let gain: f64 = srng.random_range(0.6..1.4);
    let tilt: f64 = srng.random_range(-0.15..0.15);

    let mut crng = stream_rng(content_seed, 0);
    let carrier = fgn(n, spec.hurst, &mut crng);
    let am_phase: f64 = crng.random_range(0.0..2.0 * PI);
    let tone_phases: Vec<f64> = spec
        .tones
        .iter()
        .map(|_| crng.random_range(0.0..2.0 * PI))
        .collect();

    let mut x: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / rate;
            let env = 1.0 + spec.am_depth * (2.0 * PI * spec.am_rate_hz * t + am_phase).sin();
            let tones: f64 = spec
                .tones
                .iter()
                .zip(&tone_phases)
                .map(|(&(f, a), &p)| a * (2.0 * PI * f * t + p).sin())
                .sum();
            env * (carrier[i] + tones)
        })
        .collect();
    // y[n] = x[n] - tilt * x[n-1]
    for i in (1..n).rev() {
        x[i] -= tilt * x[i - 1];
    }
    let peak = x
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let scale = 0.7 * gain / 1.4 / peak;
    Signal::new(x.into_iter().map(|v| v * scale).collect(), TARGET_RATE_HZ)
}

/// Write one WAV per (label, speaker) plus `manifest.csv` into `out_dir`.
pub fn synth_corpus(
    labels: &[LabelSpec],
    n_speakers: usize,
    seconds_per_label: f64,
    seed: u64,
    out_dir: &Path,
) -> Result<CorpusManifest> {
    if labels.len() < 2 {
        return Err(Error::InvalidArgument("need at least two labels".into()));
    }
    if n_speakers < 1 {
        return Err(Error::InvalidArgument("need at least one speaker".into()));
    }
    std::fs::create_dir_all(out_dir)?;
    let mut entries = Vec::new();
    for s in 0..n_speakers {
        let speaker = format!("spk{:02}", s + 1);
        let speaker_seed = derive_seed(seed, &[0, s as u64]);
        for (l, spec) in labels.iter().enumerate() {
            let content_seed = derive_seed(seed, &[1, s as u64, l as u64]);
            let sig = render_label_signal(spec, seconds_per_label, speaker_seed, content_seed)?;
            let path: PathBuf = out_dir.join(format!("{speaker}_{}.wav", spec.name));
            write_wav_16bit(&path, &sig)?;
            entries.push(ManifestEntry {
                path,
                label: spec.name.clone(),
                speaker: speaker.clone(),
            });
        }
    }
    let manifest = CorpusManifest::new(entries)?;
    manifest.write_csv(out_dir.join("manifest.csv"), Some(out_dir))?;
    Ok(manifest)
}
