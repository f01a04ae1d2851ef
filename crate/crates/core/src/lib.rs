//! Affective speech analysis: empirical mode decomposition, wavelet Hurst
//! features (HHHC), a surrogate-based index of non-stationarity (INS) and
//! alpha-integrated Gaussian mixture classification with a
//! leave-one-speaker-out evaluation harness.

pub mod emd;
pub mod error;
pub mod eval;
pub mod features;
pub mod gmm;
pub mod hhhc;
pub mod hurst;
pub mod ins;
pub mod rng;
pub mod signal;
pub mod spline;
pub mod synth;
pub mod wavelet;

pub use emd::{eemd_decompose, emd_decompose, sift_once, ImfSet, SiftConfig};
pub use error::{Error, Result};
pub use features::FeatureMatrix;
pub use gmm::{
    alpha_log_likelihood, classify_sequence, train_alpha_gmm, AlphaGmmModel, TrainConfig,
};
pub use hhhc::{extract_hhhc, extract_hhhc_ins, InsConfig, InsSummary};
pub use hurst::{estimate_hurst, extract_ph, wavelet_log_variances, HurstEstimate, ScaleVariance};
pub use ins::{
    compute_ins, ins_profile, ins_vector_for_imfs, make_surrogate, spectral_kl_series,
    symmetric_kl_series, InsProfile, Verdict,
};
pub use signal::{load_wav, resample_to_8k, select_voiced, Signal, VoicingConfig};

/// Working sample rate of the whole pipeline.
pub const TARGET_RATE_HZ: u32 = 8000;
