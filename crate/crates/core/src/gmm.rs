//! Alpha-integrated Gaussian mixtures with diagonal covariances.
//!
//! The mixture density is the weighted power mean of the component
//! densities, `[sum_i pi_i b_i(x)^k]^(1/k)` with `k = (1 - alpha) / 2`.
//! `alpha = -1` is the ordinary GMM. The normalization constant is taken as
//! 1: every model compared in a decision shares M and alpha, so it cancels
//! in the argmax, and the reported log-likelihoods are unnormalized for
//! alpha != -1.

use std::fmt::Write as _;
use std::path::Path;

use log::debug;
use rand::Rng;

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::rng::stream_rng;

const LN_2PI: f64 = 1.837_877_066_409_345_5;
pub const FORMAT_VERSION: u32 = 1;
/// Component mass below which a component is considered empty.
const EMPTY_MASS: f64 = 1e-8;
/// Relative variance floor against the per-dimension data variance.
const VAR_FLOOR_REL: f64 = 1e-6;
/// Absolute floor for dimensions whose data variance is zero.
const VAR_FLOOR_ABS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaGmmModel {
    pub label: String,
    pub alpha: f64,
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
}

fn logsumexp(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + v.iter().map(|a| (a - max).exp()).sum::<f64>().ln()
}

impl AlphaGmmModel {
    pub fn n_components(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.means.first().map_or(0, Vec::len)
    }

    /// Power-mean exponent (1 - alpha) / 2.
    pub fn exponent(&self) -> f64 {
        (1.0 - self.alpha) / 2.0
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.weights.len();
        if m == 0 || self.means.len() != m || self.variances.len() != m {
            return Err(Error::ModelFormat("inconsistent component counts".into()));
        }
        let d = self.dim();
        if d == 0
            || self.means.iter().any(|v| v.len() != d)
            || self.variances.iter().any(|v| v.len() != d)
        {
            return Err(Error::ModelFormat("inconsistent feature dimension".into()));
        }
        if !(self.alpha <= -1.0) {
            return Err(Error::ModelFormat(format!(
                "alpha {} must be <= -1",
                self.alpha
            )));
        }
        if self.weights.iter().any(|w| !(*w >= 0.0))
            || (self.weights.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return Err(Error::ModelFormat(
                "weights must be non-negative and sum to 1".into(),
            ));
        }
        if self
            .variances
            .iter()
            .flatten()
            .any(|v| !(*v > 0.0) || !v.is_finite())
            || self.means.iter().flatten().any(|v| !v.is_finite())
        {
            return Err(Error::ModelFormat(
                "non-finite mean or non-positive variance".into(),
            ));
        }
        Ok(())
    }

    /// log b_i(x) for a diagonal Gaussian component.
    pub fn component_log_density(&self, i: usize, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for ((&xv, &mu), &var) in x.iter().zip(&self.means[i]).zip(&self.variances[i]) {
            let d = xv - mu;
            acc += var.ln() + d * d / var;
        }
        -0.5 * (acc + x.len() as f64 * LN_2PI)
    }

    /// log pi_i + k log b_i(x) for every component.
    fn weighted_terms(&self, x: &[f64], k: f64, out: &mut Vec<f64>) {
        out.clear();
        out.extend((0..self.n_components()).map(|i| {
            let w = self.weights[i];
            if w > 0.0 {
                w.ln() + k * self.component_log_density(i, x)
            } else {
                f64::NEG_INFINITY
            }
        }));
    }

    fn log_likelihood_unchecked(&self, x: &[f64], scratch: &mut Vec<f64>) -> f64 {
        let k = self.exponent();
        self.weighted_terms(x, k, scratch);
        logsumexp(scratch) / k
    }

    /// Posterior component responsibilities, proportional to pi_i b_i(x)^k.
    pub fn responsibilities(&self, x: &[f64]) -> Vec<f64> {
        let mut terms = Vec::new();
        self.weighted_terms(x, self.exponent(), &mut terms);
        let lse = logsumexp(&terms);
        terms.iter().map(|t| (t - lse).exp()).collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "format_version = {FORMAT_VERSION}");
        let _ = writeln!(out, "label = {}", self.label);
        let _ = writeln!(out, "alpha = {:.16e}", self.alpha);
        let _ = writeln!(out, "M = {}", self.n_components());
        let _ = writeln!(out, "D = {}", self.dim());
        let row = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x:.16e}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let _ = writeln!(out, "weights");
        let _ = writeln!(out, "{}", row(&self.weights));
        let _ = writeln!(out, "means");
        for m in &self.means {
            let _ = writeln!(out, "{}", row(m));
        }
        let _ = writeln!(out, "variances");
        for v in &self.variances {
            let _ = writeln!(out, "{}", row(v));
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let bad = |m: String| Error::ModelFormat(m);
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let mut header = |key: &str| -> Result<String> {
            let line = lines.next().ok_or_else(|| bad(format!("missing {key}")))?;
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("expected `{key} = ...`")))?;
            if k.trim() != key {
                return Err(bad(format!("expected key {key}, found {}", k.trim())));
            }
            Ok(v.trim().to_string())
        };
        let version: u32 = header("format_version")?
            .parse()
            .map_err(|_| bad("bad format_version".into()))?;
        if version != FORMAT_VERSION {
            return Err(bad(format!("unsupported format_version {version}")));
        }
        let label = header("label")?;
        let alpha: f64 = header("alpha")?
            .parse()
            .map_err(|_| bad("bad alpha".into()))?;
        let m: usize = header("M")?.parse().map_err(|_| bad("bad M".into()))?;
        let d: usize = header("D")?.parse().map_err(|_| bad("bad D".into()))?;

        let mut section = |name: &str, rows: usize, width: usize| -> Result<Vec<Vec<f64>>> {
            if lines.next() != Some(name) {
                return Err(bad(format!("missing section {name}")));
            }
            (0..rows)
                .map(|_| {
                    let l = lines
                        .next()
                        .ok_or_else(|| bad(format!("truncated section {name}")))?;
                    let v = l
                        .split_whitespace()
                        .map(|t| t.parse::<f64>().map_err(|_| bad(format!("bad number {t}"))))
                        .collect::<Result<Vec<f64>>>()?;
                    if v.len() != width {
                        return Err(bad(format!(
                            "{name}: expected {width} values, got {}",
                            v.len()
                        )));
                    }
                    Ok(v)
                })
                .collect()
        };
        let weights = section("weights", 1, m)?.remove(0);
        let means = section("means", m, d)?;
        let variances = section("variances", m, d)?;
        let model = Self {
            label,
            alpha,
            weights,
            means,
            variances,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse_text(&std::fs::read_to_string(path)?)
    }
}

/// log of the alpha-integrated density of `x` (normalization constant 1),
/// evaluated in the log domain.
pub fn alpha_log_likelihood(x: &[f64], model: &AlphaGmmModel) -> Result<f64> {
    if x.len() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: x.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(model.log_likelihood_unchecked(x, &mut Vec::new()))
}

/// Sum of per-row log-likelihoods.
pub fn sequence_score(rows: &[Vec<f64>], model: &AlphaGmmModel) -> Result<f64> {
    let mut scratch = Vec::new();
    let mut total = 0.0;
    for r in rows {
        if r.len() != model.dim() {
            return Err(Error::DimensionMismatch {
                expected: model.dim(),
                got: r.len(),
            });
        }
        total += model.log_likelihood_unchecked(r, &mut scratch);
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub mixtures: usize,
    pub alpha: f64,
    pub max_iters: usize,
    /// Stop when the mean per-row objective improves by less than this.
    pub tol: f64,
    pub kmeans_iters: usize,
    /// Absolute lower bound on every variance, on top of the relative floor.
    pub min_variance: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            mixtures: 32,
            alpha: -4.0,
            max_iters: 200,
            tol: 1e-5,
            kmeans_iters: 10,
            min_variance: 1e-6,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Total objective after initialization and after every EM iteration.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub reseeded_components: usize,
}

/// Per-dimension variance floor: 1e-6 of the data variance, but never below
/// `min_variance`.
pub fn variance_floor(data: &[Vec<f64>], min_variance: f64) -> Vec<f64> {
    let d = data[0].len();
    let n = data.len() as f64;
    (0..d)
        .map(|j| {
            let mean = data.iter().map(|r| r[j]).sum::<f64>() / n;
            let var = data.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
            (VAR_FLOOR_REL * var).max(min_variance).max(VAR_FLOOR_ABS)
        })
        .collect()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-means with farthest-point seeding from a seeded first center, followed
/// by `iters` Lloyd iterations; the clusters become the initial mixture.
pub fn init_kmeans(
    data: &[Vec<f64>],
    m: usize,
    iters: usize,
    seed: u64,
    floor: &[f64],
    label: &str,
    alpha: f64,
) -> AlphaGmmModel {
    let n = data.len();
    let d = data[0].len();
    let mut rng = stream_rng(seed, 0);

    let mut centers = vec![data[rng.random_range(0..n)].clone()];
    let mut nearest: Vec<f64> = data.iter().map(|x| sq_dist(x, &centers[0])).collect();
    while centers.len() < m {
        let far = (0..n).fold(
            0,
            |best, t| if nearest[t] > nearest[best] { t } else { best },
        );
        centers.push(data[far].clone());
        for (t, x) in data.iter().enumerate() {
            nearest[t] = nearest[t].min(sq_dist(x, &centers[centers.len() - 1]));
        }
    }

    let mut assign = vec![0usize; n];
    for _ in 0..iters.max(1) {
        for (t, x) in data.iter().enumerate() {
            assign[t] = (0..m).fold(0, |best, i| {
                if sq_dist(x, &centers[i]) < sq_dist(x, &centers[best]) {
                    i
                } else {
                    best
                }
            });
        }
        let mut sums = vec![vec![0.0; d]; m];
        let mut counts = vec![0usize; m];
        for (t, x) in data.iter().enumerate() {
            counts[assign[t]] += 1;
            sums[assign[t]].iter_mut().zip(x).for_each(|(s, v)| *s += v);
        }
        for i in 0..m {
            if counts[i] > 0 {
                centers[i] = sums[i].iter().map(|s| s / counts[i] as f64).collect();
            }
        }
    }

    let global_mean: Vec<f64> = (0..d)
        .map(|j| data.iter().map(|r| r[j]).sum::<f64>() / n as f64)
        .collect();
    let global_var: Vec<f64> = (0..d)
        .map(|j| {
            let v = data
                .iter()
                .map(|r| (r[j] - global_mean[j]).powi(2))
                .sum::<f64>()
                / n as f64;
            v.max(floor[j])
        })
        .collect();
    let mut counts = vec![0usize; m];
    let mut sq = vec![vec![0.0; d]; m];
    for (t, x) in data.iter().enumerate() {
        let i = assign[t];
        counts[i] += 1;
        for j in 0..d {
            sq[i][j] += (x[j] - centers[i][j]).powi(2);
        }
    }
    let variances = (0..m)
        .map(|i| {
            if counts[i] < 2 {
                global_var.clone()
            } else {
                (0..d)
                    .map(|j| (sq[i][j] / counts[i] as f64).max(floor[j]))
                    .collect()
            }
        })
        .collect();
    let raw: Vec<f64> = counts.iter().map(|&c| c.max(1) as f64).collect();
    let total: f64 = raw.iter().sum();
    AlphaGmmModel {
        label: label.to_string(),
        alpha,
        weights: raw.iter().map(|c| c / total).collect(),
        means: centers,
        variances,
    }
}

/// Total objective sum_t log p(x_t).
pub fn objective(model: &AlphaGmmModel, data: &[Vec<f64>]) -> f64 {
    let mut scratch = Vec::new();
    data.iter()
        .map(|x| model.log_likelihood_unchecked(x, &mut scratch))
        .sum()
}

/// One E/M iteration. Components whose responsibility mass collapses are
/// re-seeded at the row the current model explains worst. Returns the
/// number of re-seeded components.
pub fn em_step(model: &mut AlphaGmmModel, data: &[Vec<f64>], floor: &[f64]) -> usize {
    let m = model.n_components();
    let d = model.dim();
    let n = data.len();
    let mut mass = vec![0.0; m];
    let mut first = vec![vec![0.0; d]; m];
    let resp: Vec<Vec<f64>> = data.iter().map(|x| model.responsibilities(x)).collect();
    for (x, r) in data.iter().zip(&resp) {
        for i in 0..m {
            mass[i] += r[i];
            first[i].iter_mut().zip(x).for_each(|(s, v)| *s += r[i] * v);
        }
    }
    let means: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            if mass[i] < EMPTY_MASS {
                model.means[i].clone()
            } else {
                first[i].iter().map(|s| s / mass[i]).collect()
            }
        })
        .collect();
    let mut second = vec![vec![0.0; d]; m];
    for (x, r) in data.iter().zip(&resp) {
        for i in 0..m {
            for j in 0..d {
                second[i][j] += r[i] * (x[j] - means[i][j]).powi(2);
            }
        }
    }
    let mut reseeded = 0;
    let mut worst: Option<usize> = None;
    for i in 0..m {
        if mass[i] < EMPTY_MASS {
            let t = *worst.get_or_insert_with(|| {
                let mut scratch = Vec::new();
                (0..n)
                    .map(|t| (t, model.log_likelihood_unchecked(&data[t], &mut scratch)))
                    .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a })
                    .0
            });
            debug!(
                "component {i} of {} emptied; re-seeding at row {t}",
                model.label
            );
            model.means[i] = data[t].clone();
            model.variances[i] = (0..d)
                .map(|j| {
                    let mu = data.iter().map(|r| r[j]).sum::<f64>() / n as f64;
                    (data.iter().map(|r| (r[j] - mu).powi(2)).sum::<f64>() / n as f64).max(floor[j])
                })
                .collect();
            model.weights[i] = 1.0 / n as f64;
            reseeded += 1;
        } else {
            model.weights[i] = mass[i] / n as f64;
            model.means[i] = means[i].clone();
            model.variances[i] = (0..d)
                .map(|j| (second[i][j] / mass[i]).max(floor[j]))
                .collect();
        }
    }
    let total: f64 = model.weights.iter().sum();
    model.weights.iter_mut().for_each(|w| *w /= total);
    reseeded
}

/// Fit an alpha-GMM to the rows of `data` by EM with alpha-weighted
/// responsibilities. At alpha = -1 this is standard EM. The best model seen
/// is returned, so the final objective is never below the initial one.
pub fn train_alpha_gmm_with_report(
    data: &FeatureMatrix,
    label: &str,
    cfg: &TrainConfig,
) -> Result<(AlphaGmmModel, TrainReport)> {
    if !(cfg.alpha <= -1.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha {} must be <= -1",
            cfg.alpha
        )));
    }
    if cfg.mixtures < 1 {
        return Err(Error::InvalidArgument(
            "need at least one mixture component".into(),
        ));
    }
    let rows = data.rows();
    if rows.len() < 2 * cfg.mixtures {
        return Err(Error::TooShort {
            needed: 2 * cfg.mixtures,
            got: rows.len(),
        });
    }
    if !(cfg.min_variance >= 0.0 && cfg.min_variance.is_finite()) {
        return Err(Error::InvalidArgument(
            "min_variance must be finite and >= 0".into(),
        ));
    }
    let floor = variance_floor(rows, cfg.min_variance);
    let mut model = init_kmeans(
        rows,
        cfg.mixtures,
        cfg.kmeans_iters,
        cfg.seed,
        &floor,
        label,
        cfg.alpha,
    );
    let mut obj = objective(&model, rows);
    let mut best = (model.clone(), obj);
    let mut report = TrainReport {
        objective_trace: vec![obj],
        iterations: 0,
        converged: false,
        reseeded_components: 0,
    };
    let per_row = rows.len() as f64;
    for _ in 0..cfg.max_iters {
        report.reseeded_components += em_step(&mut model, rows, &floor);
        let next = objective(&model, rows);
        report.objective_trace.push(next);
        report.iterations += 1;
        if next > best.1 {
            best = (model.clone(), next);
        }
        let gain = (next - obj) / per_row;
        obj = next;
        if gain < cfg.tol {
            report.converged = true;
            break;
        }
    }
    Ok((best.0, report))
}

pub fn train_alpha_gmm(
    data: &FeatureMatrix,
    label: &str,
    cfg: &TrainConfig,
) -> Result<AlphaGmmModel> {
    train_alpha_gmm_with_report(data, label, cfg).map(|(m, _)| m)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub label: String,
    /// (label, summed log-likelihood) in the order the models were given.
    pub scores: Vec<(String, f64)>,
    /// More than one model attained the top score.
    pub tied: bool,
}

/// Maximum-likelihood label for a sequence of feature vectors. Ties go to
/// the lexicographically smallest label.
pub fn classify_sequence(data: &FeatureMatrix, models: &[AlphaGmmModel]) -> Result<Classification> {
    let first = models
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty model list".into()))?;
    if data.is_empty() {
        return Err(Error::InvalidArgument("empty feature matrix".into()));
    }
    for m in models {
        if m.dim() != first.dim() || m.alpha != first.alpha {
            return Err(Error::InvalidArgument(
                "models must share dimension and alpha".into(),
            ));
        }
    }
    if data.dim() != first.dim() {
        return Err(Error::DimensionMismatch {
            expected: first.dim(),
            got: data.dim(),
        });
    }
    let scores = models
        .iter()
        .map(|m| Ok((m.label.clone(), sequence_score(data.rows(), m)?)))
        .collect::<Result<Vec<_>>>()?;
    let top = scores.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    let winners: Vec<&String> = scores.iter().filter(|s| s.1 == top).map(|s| &s.0).collect();
    let tied = winners.len() > 1;
    if tied {
        debug!("score tie between {winners:?}; choosing lexicographically first");
    }
    let label = winners
        .into_iter()
        .min()
        .cloned()
        .unwrap_or_else(|| first.label.clone());
    Ok(Classification {
        label,
        scores,
        tied,
    })
}
