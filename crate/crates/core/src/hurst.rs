//! Wavelet-based Hurst exponent estimation: detail-coefficient variances per
//! dyadic scale, then a weighted regression of log2 variance on scale.

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::signal::Signal;
use crate::wavelet::detail_pyramid;
use crate::TARGET_RATE_HZ;

const H_MIN: f64 = 0.01;
const H_MAX: f64 = 0.99;
/// Detail variances below this fraction of the input power are treated as
/// exact zeros (filter round-off on constants and polynomials).
const ANNIHILATION_RATIO: f64 = 1e-24;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleVariance {
    pub j: usize,
    pub n_j: usize,
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HurstEstimate {
    pub h: f64,
    pub theta: f64,
    /// First and last scale entering the regression.
    pub scales_used: Option<(usize, usize)>,
    /// (j, N_j, log2 variance) for every regressed scale.
    pub log_variances: Vec<(usize, usize, f64)>,
    pub valid: bool,
    pub clamped: bool,
}

impl HurstEstimate {
    fn invalid() -> Self {
        Self {
            h: 0.5,
            theta: 0.0,
            scales_used: None,
            log_variances: Vec::new(),
            valid: false,
            clamped: false,
        }
    }
}

/// Mean squared detail coefficient at each scale j in [j_min, j_max] that
/// has at least two coefficients. Scales beyond what the series supports
/// are silently dropped.
pub fn wavelet_log_variances(x: &[f64], j_min: usize, j_max: usize) -> Result<Vec<ScaleVariance>> {
    let j_min = j_min.max(1);
    let needed = 1usize << (j_min + 1).min(62);
    if x.len() < needed.max(2) {
        return Err(Error::TooShort {
            needed,
            got: x.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let power = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
    let pyramid = detail_pyramid(x, j_max, 2);
    Ok(pyramid
        .iter()
        .enumerate()
        .map(|(i, d)| (i + 1, d))
        .filter(|(j, _)| *j >= j_min)
        .map(|(j, d)| {
            let var = d.iter().map(|v| v * v).sum::<f64>() / d.len() as f64;
            let variance = if var <= ANNIHILATION_RATIO * power {
                0.0
            } else {
                var
            };
            ScaleVariance {
                j,
                n_j: d.len(),
                variance,
            }
        })
        .collect())
}

/// Weighted (by N_j) least-squares slope of log2 variance against scale;
/// H = (1 + slope) / 2 clamped to [0.01, 0.99]. Fewer than two scales with
/// positive variance give an invalid estimate.
pub fn estimate_hurst(variances: &[ScaleVariance]) -> HurstEstimate {
    let pts: Vec<(usize, usize, f64)> = variances
        .iter()
        .filter(|s| s.variance > 0.0 && s.n_j >= 2)
        .map(|s| (s.j, s.n_j, s.variance.log2()))
        .collect();
    if pts.len() < 2 {
        return HurstEstimate::invalid();
    }
    let sw: f64 = pts.iter().map(|p| p.1 as f64).sum();
    let jbar = pts.iter().map(|p| p.1 as f64 * p.0 as f64).sum::<f64>() / sw;
    let ybar = pts.iter().map(|p| p.1 as f64 * p.2).sum::<f64>() / sw;
    let sxy: f64 = pts
        .iter()
        .map(|p| p.1 as f64 * (p.0 as f64 - jbar) * (p.2 - ybar))
        .sum();
    let sxx: f64 = pts
        .iter()
        .map(|p| p.1 as f64 * (p.0 as f64 - jbar).powi(2))
        .sum();
    let theta = sxy / sxx;
    let raw = (1.0 + theta) / 2.0;
    if !raw.is_finite() {
        return HurstEstimate::invalid();
    }
    let h = raw.clamp(H_MIN, H_MAX);
    HurstEstimate {
        h,
        theta,
        scales_used: Some((pts[0].0, pts[pts.len() - 1].0)),
        log_variances: pts,
        valid: true,
        clamped: h != raw,
    }
}

/// Convenience: variances then regression, invalid on too-short input.
pub fn hurst_of_series(x: &[f64], j_min: usize, j_max: usize) -> HurstEstimate {
    match wavelet_log_variances(x, j_min, j_max) {
        Ok(v) => estimate_hurst(&v),
        Err(_) => HurstEstimate::invalid(),
    }
}

pub const PH_FRAME_MS: f64 = 50.0;
pub const PH_HOP_MS: f64 = 10.0;
pub const PH_J_MIN: usize = 2;
pub const PH_J_MAX: usize = 12;

/// pH baseline: one Hurst estimate per 50 ms frame every 10 ms, scales
/// 2..min(12, feasible), computed directly on the speech samples.
pub fn extract_ph(signal: &Signal) -> Result<FeatureMatrix> {
    if signal.sample_rate_hz() != TARGET_RATE_HZ {
        return Err(Error::InvalidArgument(format!(
            "pH extraction expects {TARGET_RATE_HZ} Hz input, got {}",
            signal.sample_rate_hz()
        )));
    }
    let frame = signal.samples_for_ms(PH_FRAME_MS);
    let hop = signal.samples_for_ms(PH_HOP_MS);
    if signal.len() < frame {
        return Err(Error::TooShort {
            needed: frame,
            got: signal.len(),
        });
    }
    let x = signal.samples();
    let n_frames = (x.len() - frame) / hop + 1;
    let mut invalid = 0usize;
    let rows: Vec<Vec<f64>> = (0..n_frames)
        .map(|f| {
            let est = hurst_of_series(&x[f * hop..f * hop + frame], PH_J_MIN, PH_J_MAX);
            if !est.valid {
                invalid += 1;
            }
            vec![est.h]
        })
        .collect();
    let mut source = String::from("pH");
    if invalid > 0 {
        source.push_str(&format!(";invalid_frames={invalid}"));
    }
    FeatureMatrix::new(vec!["pH".into()], rows, source)
}
