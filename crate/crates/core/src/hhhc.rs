//! HHHC features: per 80 ms segment, decompose into six modes and average
//! the wavelet Hurst exponent of each mode over its 20 ms frames.
//! Optionally append per-mode INS values.

use rayon::prelude::*;

use crate::emd::{eemd_decompose, emd_decompose, ImfSet, SiftConfig};
use crate::error::{Error, Result};
use crate::features::{numbered_schema, FeatureMatrix};
use crate::hurst::hurst_of_series;
use crate::ins::{default_scales, ins_vector_for_imfs, DEFAULT_SURROGATES};
use crate::rng::derive_seed;
use crate::signal::Signal;
use crate::TARGET_RATE_HZ;

pub const SEGMENT_MS: f64 = 80.0;
pub const SEGMENT_HOP_MS: f64 = 40.0;
pub const HURST_FRAME_MS: f64 = 20.0;
pub const HURST_J_MIN: usize = 3;
pub const HURST_J_MAX: usize = 12;
/// Slot value for a mode with no valid Hurst frame.
pub const MISSING_H: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InsSummary {
    /// One value per mode: the median over tested scales.
    Median,
    /// Every scale of every mode.
    Full,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InsConfig {
    pub scales: Vec<f64>,
    pub surrogates: usize,
    pub summary: InsSummary,
    pub seed: u64,
}

impl Default for InsConfig {
    fn default() -> Self {
        Self {
            scales: default_scales(),
            surrogates: DEFAULT_SURROGATES,
            summary: InsSummary::Median,
            seed: 0,
        }
    }
}

/// Decomposition of one segment with its HHHC vector.
#[derive(Debug, Clone)]
pub struct SegmentHurst {
    pub imfs: ImfSet,
    pub hurst: Vec<f64>,
    /// Modes that fell back to [`MISSING_H`].
    pub missing: Vec<usize>,
}

pub fn hhhc_schema(n_modes: usize) -> Vec<String> {
    numbered_schema("H_imf", n_modes)
}

fn segment_bounds(signal: &Signal) -> Result<(usize, usize, usize)> {
    if signal.sample_rate_hz() != TARGET_RATE_HZ {
        return Err(Error::InvalidArgument(format!(
            "HHHC extraction expects {TARGET_RATE_HZ} Hz input, got {}",
            signal.sample_rate_hz()
        )));
    }
    let seg = signal.samples_for_ms(SEGMENT_MS);
    let hop = signal.samples_for_ms(SEGMENT_HOP_MS);
    if signal.len() < seg {
        return Err(Error::TooShort {
            needed: seg,
            got: signal.len(),
        });
    }
    Ok((seg, hop, (signal.len() - seg) / hop + 1))
}

/// Decompose one segment and average the per-frame Hurst exponents of each
/// mode over its valid frames.
pub fn segment_hurst(segment: &[f64], cfg: &SiftConfig, use_eemd: bool) -> Result<SegmentHurst> {
    let imfs = if use_eemd {
        eemd_decompose(segment, cfg)?
    } else {
        emd_decompose(segment, cfg)?
    };
    let frame = (HURST_FRAME_MS * TARGET_RATE_HZ as f64 / 1000.0).round() as usize;
    let mut hurst = Vec::with_capacity(imfs.n_modes());
    let mut missing = Vec::new();
    for (m, mode) in imfs.modes.iter().enumerate() {
        let valid: Vec<f64> = mode
            .chunks_exact(frame)
            .map(|f| hurst_of_series(f, HURST_J_MIN, HURST_J_MAX))
            .filter(|e| e.valid)
            .map(|e| e.h)
            .collect();
        if valid.is_empty() {
            missing.push(m);
            hurst.push(MISSING_H);
        } else {
            hurst.push(valid.iter().sum::<f64>() / valid.len() as f64);
        }
    }
    Ok(SegmentHurst {
        imfs,
        hurst,
        missing,
    })
}

fn segment_config(cfg: &SiftConfig, seg: usize) -> SiftConfig {
    SiftConfig {
        rng_seed: derive_seed(cfg.rng_seed, &[seg as u64]),
        ..cfg.clone()
    }
}

fn note_missing(source: &mut String, per_segment: &[Vec<usize>]) {
    let notes: Vec<String> = per_segment
        .iter()
        .enumerate()
        .flat_map(|(s, ms)| ms.iter().map(move |m| format!("s{s}/imf{}", m + 1)))
        .collect();
    if !notes.is_empty() {
        source.push_str(";missing_h=");
        source.push_str(&notes.join(","));
    }
}

/// HHHC matrix: one row per 80 ms segment (hop 40 ms), one column per mode.
/// Segment `s` decomposes with seed `derive_seed(cfg.rng_seed, [s])`.
pub fn extract_hhhc(signal: &Signal, cfg: &SiftConfig, use_eemd: bool) -> Result<FeatureMatrix> {
    cfg.validate()?;
    let (seg, hop, n_seg) = segment_bounds(signal)?;
    let x = signal.samples();
    let results = (0..n_seg)
        .into_par_iter()
        .map(|s| {
            segment_hurst(
                &x[s * hop..s * hop + seg],
                &segment_config(cfg, s),
                use_eemd,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let mut source = String::from(if use_eemd { "hhhc-eemd" } else { "hhhc-emd" });
    note_missing(
        &mut source,
        &results
            .iter()
            .map(|r| r.missing.clone())
            .collect::<Vec<_>>(),
    );
    FeatureMatrix::new(
        hhhc_schema(cfg.max_imfs),
        results.into_iter().map(|r| r.hurst).collect(),
        source,
    )
}

pub fn hhhc_ins_schema(n_modes: usize, ins_cfg: &InsConfig) -> Vec<String> {
    let mut schema = hhhc_schema(n_modes);
    match ins_cfg.summary {
        InsSummary::Median => schema.extend(numbered_schema("INS_imf", n_modes)),
        InsSummary::Full => {
            for m in 1..=n_modes {
                for k in 1..=ins_cfg.scales.len() {
                    schema.push(format!("INS_imf{m}_s{k}"));
                }
            }
        }
    }
    schema
}

fn median(v: &mut [f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// HHHC vector of each segment followed by the INS of each mode: either the
/// median over tested scales (dim 12 for six modes) or every scale (dim 66
/// for six modes and ten scales). Infeasible or untestable entries are 0.
pub fn extract_hhhc_ins(
    signal: &Signal,
    cfg: &SiftConfig,
    use_eemd: bool,
    ins_cfg: &InsConfig,
) -> Result<FeatureMatrix> {
    cfg.validate()?;
    if ins_cfg.scales.is_empty() {
        return Err(Error::InvalidArgument(
            "INS needs at least one scale".into(),
        ));
    }
    let (seg, hop, n_seg) = segment_bounds(signal)?;
    let x = signal.samples();
    let rows = (0..n_seg)
        .into_par_iter()
        .map(|s| {
            let sh = segment_hurst(
                &x[s * hop..s * hop + seg],
                &segment_config(cfg, s),
                use_eemd,
            )?;
            let profiles = ins_vector_for_imfs(
                &sh.imfs,
                &ins_cfg.scales,
                ins_cfg.surrogates,
                derive_seed(ins_cfg.seed, &[s as u64]),
            )?;
            let mut row = sh.hurst.clone();
            for p in &profiles {
                match ins_cfg.summary {
                    InsSummary::Median => row.push(median(&mut p.tested_values())),
                    InsSummary::Full => row.extend_from_slice(&p.ins_values),
                }
            }
            Ok((row, sh.missing))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut source = String::from(if use_eemd {
        "hhhc+ins-eemd"
    } else {
        "hhhc+ins-emd"
    });
    note_missing(
        &mut source,
        &rows.iter().map(|r| r.1.clone()).collect::<Vec<_>>(),
    );
    FeatureMatrix::new(
        hhhc_ins_schema(cfg.max_imfs, ins_cfg),
        rows.into_iter().map(|r| r.0).collect(),
        source,
    )
}
