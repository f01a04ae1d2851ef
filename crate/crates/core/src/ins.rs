//! Index of non-stationarity: the dispersion over time of the KL distance
//! between short-time spectra and the global spectrum, compared against the
//! same statistic on phase-randomized surrogates.

use std::f64::consts::PI;
use std::fmt;

use rand::Rng;
use rayon::prelude::*;
use rustfft::{num_complex::Complex, FftPlanner};
use statrs::distribution::{ContinuousCDF, Gamma};

use crate::emd::ImfSet;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream_rng};

pub const SPECTRAL_FLOOR: f64 = 1e-12;
pub const MIN_WINDOW: usize = 8;
pub const MIN_SURROGATES: usize = 8;
pub const DEFAULT_SURROGATES: usize = 50;
pub const CONFIDENCE: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Stationary,
    NonStationary,
    /// Surrogate dispersion was zero (e.g. constant or all-zero series).
    Untestable,
    /// Window shorter than the minimum for this series length.
    Infeasible,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Stationary => "stationary",
            Verdict::NonStationary => "non-stationary",
            Verdict::Untestable => "untestable",
            Verdict::Infeasible => "infeasible",
        })
    }
}

/// Phase-randomized surrogate: same length and periodogram, phases of the
/// non-DC, non-Nyquist bins replaced by i.i.d. uniform draws.
pub fn make_surrogate(x: &[f64], seed: u64) -> Result<Vec<f64>> {
    Ok(SurrogateMaker::new(x)?.make(seed))
}

/// Spectrum of one series, kept for drawing many surrogates of it.
struct SurrogateMaker {
    magnitudes: Vec<f64>,
    spectrum: Vec<Complex<f64>>,
    inverse: std::sync::Arc<dyn rustfft::Fft<f64>>,
}

impl SurrogateMaker {
    fn new(x: &[f64]) -> Result<Self> {
        if x.len() < 4 {
            return Err(Error::TooShort {
                needed: 4,
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let n = x.len();
        let mut planner = FftPlanner::new();
        let mut spectrum: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
        planner.plan_fft_forward(n).process(&mut spectrum);
        Ok(Self {
            magnitudes: spectrum.iter().map(|c| c.norm()).collect(),
            spectrum,
            inverse: planner.plan_fft_inverse(n),
        })
    }

    fn make(&self, seed: u64) -> Vec<f64> {
        let n = self.spectrum.len();
        let mut spec = self.spectrum.clone();
        let mut rng = stream_rng(seed, 0);
        // DC (and Nyquist for even n) stay real with their original sign.
        for k in 1..n.div_ceil(2) {
            let phase: f64 = rng.random_range(-PI..PI);
            let c = Complex::from_polar(self.magnitudes[k], phase);
            spec[k] = c;
            spec[n - k] = c.conj();
        }
        self.inverse.process(&mut spec);
        let inv = 1.0 / n as f64;
        spec.iter().map(|c| c.re * inv).collect()
    }
}

/// Default number of short-time spectra: windows overlap by at least half.
pub fn default_window_count(len: usize, window: usize) -> usize {
    (2 * len / window).saturating_sub(1).max(2)
}

/// Floor and normalize a power spectrum in place to a probability vector.
/// An all-zero spectrum maps to the uniform distribution.
fn normalize_spectrum(power: &mut [f64]) {
    let total: f64 = power.iter().sum();
    let k = power.len() as f64;
    if total > 0.0 {
        let denom = 1.0 + k * SPECTRAL_FLOOR;
        power
            .iter_mut()
            .for_each(|p| *p = (*p / total + SPECTRAL_FLOOR) / denom);
    } else {
        power.iter_mut().for_each(|p| *p = 1.0 / k);
    }
}

/// Reusable FFT plan and window for one window length.
struct ShortTimeSpectra {
    window: Vec<f64>,
    fft: std::sync::Arc<dyn rustfft::Fft<f64>>,
    symmetric: bool,
}

impl ShortTimeSpectra {
    fn new(len: usize) -> Self {
        let window = (0..len)
            .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / (len - 1) as f64).cos())
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(len);
        Self {
            window,
            fft,
            symmetric: false,
        }
    }

    /// KL(p_n || p_bar) for `n_windows` Hann-windowed spectra whose starts
    /// are spread uniformly over the series.
    fn kl_series(&self, x: &[f64], n_windows: usize) -> Vec<f64> {
        let t = self.window.len();
        let bins = t / 2 + 1;
        let span = (x.len() - t) as f64;
        let mut buf = vec![Complex::new(0.0, 0.0); t];
        let mut scratch = vec![Complex::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        let mut powers = vec![0.0; n_windows * bins];
        let mut global = vec![0.0; bins];
        for (n, p) in powers.chunks_exact_mut(bins).enumerate() {
            let start = (n as f64 * span / (n_windows - 1) as f64).round() as usize;
            for (b, (v, w)) in buf
                .iter_mut()
                .zip(x[start..start + t].iter().zip(&self.window))
            {
                *b = Complex::new(v * w, 0.0);
            }
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            for ((pv, g), c) in p.iter_mut().zip(global.iter_mut()).zip(&buf[..bins]) {
                *pv = c.norm_sqr();
                *g += *pv;
            }
        }
        normalize_spectrum(&mut global);
        let log_global: Vec<f64> = global.iter().map(|g| g.ln()).collect();
        powers
            .chunks_exact_mut(bins)
            .map(|p| {
                normalize_spectrum(p);
                let terms = p.iter().zip(&global).zip(&log_global);
                let kl: f64 = if self.symmetric {
                    terms.map(|((a, b), lb)| (a - b) * (a.ln() - lb)).sum()
                } else {
                    terms.map(|((a, _), lb)| a * (a.ln() - lb)).sum()
                };
                kl.max(0.0)
            })
            .collect()
    }
}

/// KL divergence of each of `n_windows` short-time spectra (Hann window of
/// `window_len` samples) from the time-averaged spectrum.
pub fn spectral_kl_series(x: &[f64], window_len: usize, n_windows: usize) -> Result<Vec<f64>> {
    kl_series_checked(x, window_len, n_windows, false)
}

/// As [`spectral_kl_series`] with the symmetrized divergence
/// KL(p_n || p_bar) + KL(p_bar || p_n).
pub fn symmetric_kl_series(x: &[f64], window_len: usize, n_windows: usize) -> Result<Vec<f64>> {
    kl_series_checked(x, window_len, n_windows, true)
}

fn kl_series_checked(
    x: &[f64],
    window_len: usize,
    n_windows: usize,
    symmetric: bool,
) -> Result<Vec<f64>> {
    if window_len < 2 || window_len > x.len() {
        return Err(Error::InvalidArgument(format!(
            "window of {window_len} samples does not fit a series of {}",
            x.len()
        )));
    }
    if n_windows < 2 {
        return Err(Error::InvalidArgument("need at least two windows".into()));
    }
    let sts = ShortTimeSpectra {
        symmetric,
        ..ShortTimeSpectra::new(window_len)
    };
    Ok(sts.kl_series(x, n_windows))
}

fn population_variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    v.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n
}

/// Result of the stationarity test at one observation scale.
#[derive(Debug, Clone, PartialEq)]
pub struct InsPoint {
    pub scale: f64,
    pub window_len: usize,
    pub ins: f64,
    pub gamma: f64,
    pub verdict: Verdict,
    pub theta1: f64,
    pub theta0_mean: f64,
}

/// Stationarity test of `x` at window length `scale * len(x)` against
/// `surrogates` surrogates. Surrogate j is drawn from `derive_seed(seed, [j])`.
pub fn compute_ins(x: &[f64], scale: f64, surrogates: usize, seed: u64) -> Result<InsPoint> {
    check_request(x, scale, surrogates)?;
    window_for(x.len(), scale)?;
    let surr = draw_surrogates(x, surrogates, seed)?;
    ins_against(x, scale, &surr)
}

fn check_request(x: &[f64], scale: f64, surrogates: usize) -> Result<()> {
    if !(scale > 0.0 && scale <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "scale {scale} outside (0, 1]"
        )));
    }
    if surrogates < MIN_SURROGATES {
        return Err(Error::InvalidArgument(format!(
            "need at least {MIN_SURROGATES} surrogates"
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

fn window_for(len: usize, scale: f64) -> Result<usize> {
    let window_len = (scale * len as f64).round() as usize;
    if window_len < MIN_WINDOW {
        return Err(Error::TooShort {
            needed: MIN_WINDOW,
            got: window_len,
        });
    }
    Ok(window_len)
}

fn draw_surrogates(x: &[f64], count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let maker = SurrogateMaker::new(x)?;
    Ok((0..count)
        .into_par_iter()
        .map(|j| maker.make(derive_seed(seed, &[j as u64])))
        .collect())
}

fn ins_against(x: &[f64], scale: f64, surrogates: &[Vec<f64>]) -> Result<InsPoint> {
    let window_len = window_for(x.len(), scale)?;
    let n_windows = default_window_count(x.len(), window_len);
    let sts = ShortTimeSpectra::new(window_len);
    let theta1 = population_variance(&sts.kl_series(x, n_windows));
    let theta0: Vec<f64> = surrogates
        .par_iter()
        .map(|s| population_variance(&sts.kl_series(s, n_windows)))
        .collect();
    let theta0_mean = theta0.iter().sum::<f64>() / theta0.len() as f64;
    if !(theta0_mean > 0.0) {
        return Err(Error::Untestable("surrogate KL dispersion is zero".into()));
    }
    let ins = (theta1 / theta0_mean).sqrt();
    let gamma = gamma_threshold(&theta0, theta0_mean);
    let verdict = if ins > gamma {
        Verdict::NonStationary
    } else {
        Verdict::Stationary
    };
    Ok(InsPoint {
        scale,
        window_len,
        ins,
        gamma,
        verdict,
        theta1,
        theta0_mean,
    })
}

/// sqrt of the 95% quantile of a moment-matched Gamma fit to the
/// mean-normalized surrogate dispersions.
fn gamma_threshold(theta0: &[f64], mean: f64) -> f64 {
    let z: Vec<f64> = theta0.iter().map(|t| t / mean).collect();
    let m = z.iter().sum::<f64>() / z.len() as f64;
    let v = z.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / (z.len() - 1) as f64;
    if !(v > 0.0) {
        return m.sqrt();
    }
    let shape = m * m / v;
    let rate = m / v;
    match Gamma::new(shape, rate) {
        Ok(g) => g.inverse_cdf(CONFIDENCE).sqrt(),
        Err(_) => m.sqrt(),
    }
}

/// `n` observation scales spaced logarithmically over [lo, hi].
pub fn log_spaced_scales(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![hi];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

pub fn default_scales() -> Vec<f64> {
    log_spaced_scales(0.0015, 0.5, 10)
}

/// INS test across a grid of observation scales for one series.
#[derive(Debug, Clone, PartialEq)]
pub struct InsProfile {
    pub scales: Vec<f64>,
    pub ins_values: Vec<f64>,
    pub gamma_thresholds: Vec<f64>,
    pub verdicts: Vec<Verdict>,
    pub theta1: Vec<f64>,
    pub theta0_mean: Vec<f64>,
    pub surrogate_count: usize,
}

impl InsProfile {
    /// Values at scales that were actually tested.
    pub fn tested_values(&self) -> Vec<f64> {
        self.ins_values
            .iter()
            .zip(&self.verdicts)
            .filter(|(_, v)| matches!(v, Verdict::Stationary | Verdict::NonStationary))
            .map(|(x, _)| *x)
            .collect()
    }
}

/// Test `x` at every scale with one shared set of surrogates, so each entry
/// equals `compute_ins(x, scale, surrogates, seed)`. Infeasible scales and
/// untestable series record INS = 0 with the matching verdict instead of
/// failing.
pub fn ins_profile(x: &[f64], scales: &[f64], surrogates: usize, seed: u64) -> Result<InsProfile> {
    let mut sorted = scales.to_vec();
    sorted.sort_by(f64::total_cmp);
    for &s in &sorted {
        check_request(x, s, surrogates)?;
    }
    let mut p = InsProfile {
        scales: sorted.clone(),
        ins_values: Vec::new(),
        gamma_thresholds: Vec::new(),
        verdicts: Vec::new(),
        theta1: Vec::new(),
        theta0_mean: Vec::new(),
        surrogate_count: surrogates,
    };
    let any_feasible = sorted.iter().any(|&s| window_for(x.len(), s).is_ok());
    let surr = if any_feasible {
        draw_surrogates(x, surrogates, seed)?
    } else {
        Vec::new()
    };
    for &s in &sorted {
        let (ins, gamma, verdict, t1, t0) = match ins_against(x, s, &surr) {
            Ok(pt) => (pt.ins, pt.gamma, pt.verdict, pt.theta1, pt.theta0_mean),
            Err(Error::TooShort { .. }) => (0.0, 0.0, Verdict::Infeasible, 0.0, 0.0),
            Err(Error::Untestable(_)) => (0.0, 0.0, Verdict::Untestable, 0.0, 0.0),
            Err(e) => return Err(e),
        };
        p.ins_values.push(ins);
        p.gamma_thresholds.push(gamma);
        p.verdicts.push(verdict);
        p.theta1.push(t1);
        p.theta0_mean.push(t0);
    }
    Ok(p)
}

/// INS profile of every mode of an IMF set. All-zero padded modes are
/// untestable and record INS = 0 at every scale.
pub fn ins_vector_for_imfs(
    imfs: &ImfSet,
    scales: &[f64],
    surrogates: usize,
    seed: u64,
) -> Result<Vec<InsProfile>> {
    imfs.modes
        .iter()
        .enumerate()
        .map(|(m, mode)| ins_profile(mode, scales, surrogates, derive_seed(seed, &[m as u64])))
        .collect()
}
