//! Mono WAV input/output and the amplitude to dB SPL calibration.
//!
//! Samples are held as `f32` in digital full scale. A unit-amplitude sine is
//! assigned `Calibration::full_scale_dbspl` dB SPL; with the default of
//! 105 dB the recruitment reference envelope is exactly 1.0.

use std::path::Path;

use hound::{SampleFormat, WavSpec};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lowest sample rate the transforms accept.
pub const MIN_SAMPLE_RATE: u32 = 8000;

/// Default dB SPL of a full-scale sine.
pub const DEFAULT_FULL_SCALE_DBSPL: f64 = 105.0;

/// A mono waveform in digital full scale.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f32>,
    sample_rate: u32,
}

impl AudioBuffer {
    /// Builds a buffer, rejecting non-finite samples and rates below 8 kHz.
    pub fn new(samples: Vec<f32>, sample_rate: u32) -> Result<Self> {
        if sample_rate < MIN_SAMPLE_RATE {
            return Err(Error::Param(format!(
                "sample rate {sample_rate} Hz is below the minimum of {MIN_SAMPLE_RATE} Hz"
            )));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::Domain(format!("sample {i} is not finite")));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    /// Builds a buffer from `f64` samples (rounded to `f32`).
    pub fn from_f64(samples: &[f64], sample_rate: u32) -> Result<Self> {
        Self::new(samples.iter().map(|&s| s as f32).collect(), sample_rate)
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.samples.iter().map(|&s| s as f64).collect()
    }

    pub fn into_samples(self) -> Vec<f32> {
        self.samples
    }
}

/// Maps digital full scale to sound pressure level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub full_scale_dbspl: f64,
}

impl Calibration {
    pub fn new(full_scale_dbspl: f64) -> Result<Self> {
        if !(full_scale_dbspl.is_finite() && full_scale_dbspl > 0.0) {
            return Err(Error::Param(format!(
                "full-scale level must be positive, got {full_scale_dbspl}"
            )));
        }
        Ok(Self { full_scale_dbspl })
    }

    /// Linear amplitude whose level is `dbspl`.
    pub fn spl_to_amplitude(&self, dbspl: f64) -> f64 {
        10f64.powf((dbspl - self.full_scale_dbspl) / 20.0)
    }
}

impl Default for Calibration {
    fn default() -> Self {
        Self {
            full_scale_dbspl: DEFAULT_FULL_SCALE_DBSPL,
        }
    }
}

/// Level in dB SPL of a sine with peak amplitude `a`.
pub fn amplitude_to_spl(a: f64, cal: Calibration) -> Result<f64> {
    if a.is_nan() || a <= 0.0 {
        return Err(Error::Domain(format!(
            "amplitude must be positive to express in dB, got {a}"
        )));
    }
    Ok(20.0 * a.log10() + cal.full_scale_dbspl)
}

/// On-disk sample encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WavFormat {
    Pcm16,
    Float32,
}

/// Reads a mono PCM16 or float32 WAV file.
pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioBuffer> {
    let path = path.as_ref();
    let reader = hound::WavReader::open(path).map_err(|e| match e {
        hound::Error::IoError(io) => Error::io(path, io),
        other => Error::Wav(other),
    })?;
    let (buf, _) = decode(reader)?;
    Ok(buf)
}

/// Reads a WAV file and also reports its sample encoding.
pub fn read_wav_with_format(path: impl AsRef<Path>) -> Result<(AudioBuffer, WavFormat)> {
    let path = path.as_ref();
    let reader = hound::WavReader::open(path).map_err(|e| match e {
        hound::Error::IoError(io) => Error::io(path, io),
        other => Error::Wav(other),
    })?;
    decode(reader)
}

fn decode<R: std::io::Read>(reader: hound::WavReader<R>) -> Result<(AudioBuffer, WavFormat)> {
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(Error::Format(format!(
            "multichannel unsupported ({} channels)",
            spec.channels
        )));
    }
    let (samples, format) = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => {
            let samples = reader
                .into_samples::<i16>()
                .map(|s| s.map(|v| v as f32 / 32768.0))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            (samples, WavFormat::Pcm16)
        }
        (SampleFormat::Float, 32) => {
            let samples = reader
                .into_samples::<f32>()
                .collect::<std::result::Result<Vec<_>, _>>()?;
            (samples, WavFormat::Float32)
        }
        (fmt, bits) => {
            return Err(Error::Format(format!(
                "{bits}-bit {fmt:?} samples; only 16-bit PCM and 32-bit float are supported"
            )))
        }
    };
    Ok((AudioBuffer::new(samples, spec.sample_rate)?, format))
}

/// Writes `buf` to `path` and returns the number of samples that had to be
/// hard-clipped into [-1, 1].
pub fn write_wav(path: impl AsRef<Path>, buf: &AudioBuffer, format: WavFormat) -> Result<usize> {
    let path = path.as_ref();
    let spec = WavSpec {
        channels: 1,
        sample_rate: buf.sample_rate,
        bits_per_sample: match format {
            WavFormat::Pcm16 => 16,
            WavFormat::Float32 => 32,
        },
        sample_format: match format {
            WavFormat::Pcm16 => SampleFormat::Int,
            WavFormat::Float32 => SampleFormat::Float,
        },
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(|e| match e {
        hound::Error::IoError(io) => Error::io(path, io),
        other => Error::Wav(other),
    })?;
    let mut clipped = 0usize;
    for &s in &buf.samples {
        let c = if !(-1.0..=1.0).contains(&s) {
            clipped += 1;
            s.clamp(-1.0, 1.0)
        } else {
            s
        };
        match format {
            WavFormat::Pcm16 => {
                let q = (c as f64 * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
                writer.write_sample(q)?;
            }
            WavFormat::Float32 => writer.write_sample(c)?,
        }
    }
    writer.finalize()?;
    Ok(clipped)
}
