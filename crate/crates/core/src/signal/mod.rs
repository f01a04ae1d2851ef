//! Signal ingestion and pre-processing: WAV I/O, resampling to the working
//! rate and voiced-frame selection.

mod manifest;
mod resample;
mod voicing;
mod wav;

pub use manifest::{CorpusManifest, ManifestEntry};
pub use resample::resample_to_8k;
pub use voicing::{
    frame_energy, frame_zcr, quantile, select_voiced, voiced_frame_mask, VoicingConfig,
};
pub use wav::{load_wav, write_wav_16bit};

use crate::error::{Error, Result};

/// A uniformly sampled, real, mono waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    samples: Vec<f64>,
    sample_rate_hz: u32,
}

impl Signal {
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self> {
        if sample_rate_hz == 0 {
            return Err(Error::InvalidArgument(
                "sample rate must be positive".into(),
            ));
        }
        if samples.is_empty() {
            return Err(Error::TooShort { needed: 1, got: 0 });
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }

    /// Number of samples spanning `ms` milliseconds at this rate.
    pub fn samples_for_ms(&self, ms: f64) -> usize {
        (ms * self.sample_rate_hz as f64 / 1000.0).round() as usize
    }
}
