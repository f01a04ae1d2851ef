//! Empirical mode decomposition by envelope sifting, and its noise-assisted
//! ensemble variant.

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::spline::NaturalCubicSpline;

/// Minimum input length accepted by the decomposers.
pub const MIN_EMD_LEN: usize = 16;

/// Trials decomposed concurrently before their modes are folded into the
/// running ensemble sum.
const TRIAL_BATCH: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct SiftConfig {
    pub max_imfs: usize,
    pub max_sift_iters: usize,
    /// Cauchy-type stop threshold on the sifting SD.
    pub sd_threshold: f64,
    pub ensemble_trials: usize,
    /// Added white-noise std, relative to the std of the decomposed series.
    pub noise_std: f64,
    pub rng_seed: u64,
}

impl Default for SiftConfig {
    fn default() -> Self {
        Self {
            max_imfs: 6,
            max_sift_iters: 50,
            sd_threshold: 0.2,
            ensemble_trials: 100,
            noise_std: 0.01,
            rng_seed: 0,
        }
    }
}

impl SiftConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_imfs < 1 {
            return Err(Error::InvalidArgument("max_imfs must be >= 1".into()));
        }
        if self.max_sift_iters < 1 {
            return Err(Error::InvalidArgument("max_sift_iters must be >= 1".into()));
        }
        if !(self.sd_threshold > 0.0) {
            return Err(Error::InvalidArgument("sd_threshold must be > 0".into()));
        }
        if !(self.noise_std >= 0.0) || !self.noise_std.is_finite() {
            return Err(Error::InvalidArgument("noise_std must be >= 0".into()));
        }
        if self.ensemble_trials < 1 {
            return Err(Error::InvalidArgument(
                "ensemble_trials must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Intrinsic mode functions (fastest first) plus the final residual.
#[derive(Debug, Clone, PartialEq)]
pub struct ImfSet {
    pub modes: Vec<Vec<f64>>,
    pub residual: Vec<f64>,
}

impl ImfSet {
    pub fn input_len(&self) -> usize {
        self.residual.len()
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    /// True when mode `m` is an all-zero padding slot.
    pub fn is_padding(&self, m: usize) -> bool {
        self.modes[m].iter().all(|&v| v == 0.0)
    }

    /// Number of modes that are not padding.
    pub fn natural_modes(&self) -> usize {
        (0..self.modes.len())
            .filter(|&m| !self.is_padding(m))
            .count()
    }

    /// Sum of all modes plus the residual.
    pub fn reconstruct(&self) -> Vec<f64> {
        let mut out = self.residual.clone();
        for m in &self.modes {
            out.iter_mut().zip(m).for_each(|(o, v)| *o += v);
        }
        out
    }
}

/// Indices of interior local maxima and minima. Plateaus report their first
/// sample.
pub fn local_extrema(x: &[f64]) -> (Vec<usize>, Vec<usize>) {
    let mut maxima = Vec::new();
    let mut minima = Vec::new();
    for i in 1..x.len().saturating_sub(1) {
        let (prev, cur, next) = (x[i - 1], x[i], x[i + 1]);
        if prev < cur && cur >= next {
            maxima.push(i);
        } else if prev > cur && cur <= next {
            minima.push(i);
        }
    }
    (maxima, minima)
}

pub fn count_zero_crossings(x: &[f64]) -> usize {
    let mut count = 0;
    let mut last_sign = 0i8;
    for &v in x {
        let s = if v > 0.0 {
            1
        } else if v < 0.0 {
            -1
        } else {
            0
        };
        if s != 0 {
            if last_sign != 0 && s != last_sign {
                count += 1;
            }
            last_sign = s;
        }
    }
    count
}

/// |#extrema - #zero-crossings| <= 1.
pub fn is_imf_admissible(x: &[f64]) -> bool {
    let (mx, mn) = local_extrema(x);
    let extrema = mx.len() + mn.len();
    extrema.abs_diff(count_zero_crossings(x)) <= 1
}

/// Knots for one envelope: the extrema plus the two nearest extrema on each
/// side mirrored about the first and last samples.
fn envelope_knots(x: &[f64], idx: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let last = (n - 1) as f64;
    let mut t = Vec::with_capacity(idx.len() + 4);
    let mut v = Vec::with_capacity(idx.len() + 4);
    for &i in idx.iter().take(2).rev() {
        t.push(-(i as f64));
        v.push(x[i]);
    }
    for &i in idx {
        t.push(i as f64);
        v.push(x[i]);
    }
    for &i in idx.iter().rev().take(2) {
        t.push(2.0 * last - i as f64);
        v.push(x[i]);
    }
    (t, v)
}

/// One sifting step: spline envelopes through the maxima and minima, local
/// trend as their mean, detail as the input minus the trend.
///
/// Returns [`Error::TooFewExtrema`] when the series lacks an interior
/// maximum or minimum, which marks the end of a decomposition.
pub fn sift_once(x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if x.len() < 4 {
        return Err(Error::TooShort {
            needed: 4,
            got: x.len(),
        });
    }
    let (maxima, minima) = local_extrema(x);
    if maxima.is_empty() || minima.is_empty() || maxima.len() + minima.len() < 2 {
        return Err(Error::TooFewExtrema);
    }
    let (tu, vu) = envelope_knots(x, &maxima);
    let (tl, vl) = envelope_knots(x, &minima);
    let mut upper = Vec::new();
    let mut lower = Vec::new();
    NaturalCubicSpline::new(&tu, &vu).eval_grid(x.len(), &mut upper);
    NaturalCubicSpline::new(&tl, &vl).eval_grid(x.len(), &mut lower);
    let trend: Vec<f64> = upper
        .iter()
        .zip(&lower)
        .map(|(u, l)| 0.5 * (u + l))
        .collect();
    let detail: Vec<f64> = x.iter().zip(&trend).map(|(v, a)| v - a).collect();
    Ok((detail, trend))
}

fn has_oscillation(x: &[f64]) -> bool {
    let (mx, mn) = local_extrema(x);
    !mx.is_empty() && !mn.is_empty()
}

fn check_input(x: &[f64]) -> Result<()> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    if x.len() < MIN_EMD_LEN {
        return Err(Error::TooShort {
            needed: MIN_EMD_LEN,
            got: x.len(),
        });
    }
    Ok(())
}

/// Subtract the modes from `x` one after another.
fn complement(x: &[f64], modes: &[Vec<f64>]) -> Vec<f64> {
    let mut r = x.to_vec();
    for m in modes {
        r.iter_mut().zip(m).for_each(|(a, b)| *a -= b);
    }
    r
}

/// Sift a candidate until it is admissible and the SD criterion holds, or
/// the iteration cap is reached.
fn extract_mode(residual: &[f64], cfg: &SiftConfig) -> Vec<f64> {
    let mut h = residual.to_vec();
    for _ in 0..cfg.max_sift_iters {
        let detail = match sift_once(&h) {
            Ok((d, _)) => d,
            Err(_) => break,
        };
        let num: f64 = h.iter().zip(&detail).map(|(a, b)| (a - b) * (a - b)).sum();
        let den: f64 = h.iter().map(|a| a * a).sum();
        let sd = if den > 0.0 { num / den } else { 0.0 };
        h = detail;
        if sd < cfg.sd_threshold && is_imf_admissible(&h) {
            break;
        }
    }
    h
}

/// Plain EMD. Stops after `max_imfs` modes, when the residual no longer
/// oscillates, or when it is numerically zero; missing modes are returned
/// as all-zero padding so every set has exactly `max_imfs` slots.
pub fn emd_decompose(x: &[f64], cfg: &SiftConfig) -> Result<ImfSet> {
    cfg.validate()?;
    check_input(x)?;
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut modes: Vec<Vec<f64>> = Vec::with_capacity(cfg.max_imfs);
    let mut residual = x.to_vec();
    while modes.len() < cfg.max_imfs {
        let peak = residual.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if peak <= 1e-10 * scale || !has_oscillation(&residual) {
            break;
        }
        let mode = extract_mode(&residual, cfg);
        residual.iter_mut().zip(&mode).for_each(|(r, m)| *r -= m);
        modes.push(mode);
    }
    modes.resize(cfg.max_imfs, vec![0.0; x.len()]);
    let residual = complement(x, &modes);
    Ok(ImfSet { modes, residual })
}

fn std_dev(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt()
}

/// Ensemble EMD: average the modes of `ensemble_trials` decompositions of
/// the input plus independent white Gaussian noise. Trial `i` draws its
/// noise from substream `i` of `rng_seed`. The residual is the complement
/// of the averaged modes, so reconstruction is exact.
///
/// Averaged modes are generally not admissible IMFs themselves.
pub fn eemd_decompose(x: &[f64], cfg: &SiftConfig) -> Result<ImfSet> {
    cfg.validate()?;
    check_input(x)?;
    let noise_sd = cfg.noise_std * std_dev(x);
    let trial = |i: usize| -> Result<ImfSet> {
        if noise_sd == 0.0 {
            return emd_decompose(x, cfg);
        }
        let mut rng = stream_rng(cfg.rng_seed, i as u64);
        let normal =
            Normal::new(0.0, noise_sd).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let noisy: Vec<f64> = x.iter().map(|v| v + normal.sample(&mut rng)).collect();
        emd_decompose(&noisy, cfg)
    };

    let mut sums = vec![vec![0.0; x.len()]; cfg.max_imfs];
    let trials: Vec<usize> = (0..cfg.ensemble_trials).collect();
    for batch in trials.chunks(TRIAL_BATCH) {
        let sets = batch
            .par_iter()
            .map(|&i| trial(i))
            .collect::<Result<Vec<_>>>()?;
        for set in &sets {
            for (sum, mode) in sums.iter_mut().zip(&set.modes) {
                sum.iter_mut().zip(mode).for_each(|(s, v)| *s += v);
            }
        }
    }
    let inv = cfg.ensemble_trials as f64;
    let modes: Vec<Vec<f64>> = sums
        .into_iter()
        .map(|s| s.into_iter().map(|v| v / inv).collect())
        .collect();
    let residual = complement(x, &modes);
    Ok(ImfSet { modes, residual })
}
