use super::Signal;
use crate::error::{Error, Result};

/// Voiced-frame selection parameters. A frame is kept when its energy is at
/// least the `energy_quantile` of the file's frame energies and its
/// zero-crossing rate at most the `zcr_quantile` of the file's frame ZCRs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoicingConfig {
    pub frame_ms: f64,
    pub energy_quantile: f64,
    pub zcr_quantile: f64,
}

impl Default for VoicingConfig {
    fn default() -> Self {
        Self {
            frame_ms: 16.0,
            energy_quantile: 0.5,
            zcr_quantile: 0.5,
        }
    }
}

/// Mean of squared samples.
pub fn frame_energy(frame: &[f64]) -> f64 {
    frame.iter().map(|v| v * v).sum::<f64>() / frame.len() as f64
}

/// Sign changes divided by (frame length - 1).
pub fn frame_zcr(frame: &[f64]) -> f64 {
    if frame.len() < 2 {
        return 0.0;
    }
    let crossings = frame.windows(2).filter(|w| w[0] * w[1] < 0.0).count();
    crossings as f64 / (frame.len() - 1) as f64
}

/// Linear-interpolation quantile (type 7) of an unsorted sample.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Per-frame voiced decision for the non-overlapping frames of `signal`.
/// Frames with zero energy are never voiced.
pub fn voiced_frame_mask(signal: &Signal, cfg: &VoicingConfig) -> Result<Vec<bool>> {
    if !(0.0..=1.0).contains(&cfg.energy_quantile) || !(0.0..=1.0).contains(&cfg.zcr_quantile) {
        return Err(Error::InvalidArgument(
            "voicing quantiles must lie in [0, 1]".into(),
        ));
    }
    let frame_len = signal.samples_for_ms(cfg.frame_ms).max(2);
    if signal.len() < frame_len {
        return Err(Error::TooShort {
            needed: frame_len,
            got: signal.len(),
        });
    }
    let frames: Vec<&[f64]> = signal.samples().chunks_exact(frame_len).collect();
    let energies: Vec<f64> = frames.iter().map(|f| frame_energy(f)).collect();
    let zcrs: Vec<f64> = frames.iter().map(|f| frame_zcr(f)).collect();
    let e_thr = quantile(&energies, cfg.energy_quantile);
    let z_thr = quantile(&zcrs, cfg.zcr_quantile);
    Ok(energies
        .iter()
        .zip(&zcrs)
        .map(|(&e, &z)| e > 0.0 && e >= e_thr && z <= z_thr)
        .collect())
}

/// Concatenate, in temporal order, the frames that have high energy and a
/// low zero-crossing rate.
pub fn select_voiced(signal: &Signal, cfg: &VoicingConfig) -> Result<Signal> {
    let mask = voiced_frame_mask(signal, cfg)?;
    let frame_len = signal.samples_for_ms(cfg.frame_ms).max(2);
    let kept: Vec<f64> = signal
        .samples()
        .chunks_exact(frame_len)
        .zip(&mask)
        .filter(|(_, &keep)| keep)
        .flat_map(|(f, _)| f.iter().copied())
        .collect();
    if kept.is_empty() {
        return Err(Error::NoVoicedFrames);
    }
    Signal::new(kept, signal.sample_rate_hz())
}
