//! Hearing-impairment simulation as a speech data-augmentation stage.
//!
//! Two waveform transforms model reduced hearing ability:
//!
//! * [`smearing`] broadens roex auditory filters and smears the power
//!   spectrogram, simulating reduced frequency selectivity.
//! * [`recruitment`] splits the signal into gammatone channels and expands
//!   each channel's envelope according to an audiogram, simulating loudness
//!   recruitment.
//!
//! [`sampling`] draws severity-conditioned random parameters for both, and
//! [`augment`] runs a deterministic, parallel batch pipeline over a corpus of
//! WAV files. [`features`] provides log-mel features and SpecAugment masking.

pub mod audio;
pub mod augment;
pub mod envelope;
pub mod error;
pub mod features;
pub mod gammatone;
pub mod recruitment;
pub mod sampling;
pub mod smearing;
pub mod stft;
pub mod synth;

pub use audio::{
    amplitude_to_spl, read_wav, read_wav_with_format, write_wav, AudioBuffer, Calibration,
    WavFormat,
};
pub use error::{Error, Result};
pub use gammatone::{analyze, design_filterbank, ChannelDecomposition, GammatoneFilterbank};
pub use recruitment::{apply_loudness_recruitment, recruit, Audiogram};
pub use sampling::{
    derive_stream, sample_audiogram, sample_smearing_params, RandomStream, Severity,
};
pub use smearing::{apply_spectral_smearing, SmearingParams};
pub use stft::{istft, stft, StftConfig};
