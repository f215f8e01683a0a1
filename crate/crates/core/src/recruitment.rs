//! Loudness recruitment: envelope-driven expansion of each gammatone channel
//! according to an audiogram.
//!
//! Channel `i` is scaled sample-by-sample by `(E_i(n) / E_theta)^k_i` with
//! `k_i = theta / (theta - HL_i) - 1`, then the channels are summed.

use serde::{Deserialize, Serialize};

use crate::audio::{AudioBuffer, Calibration};
use crate::error::{Error, Result};
use crate::gammatone::{analyze, ChannelDecomposition, GammatoneFilterbank};

/// Audiogram frequencies in Hz.
pub const AUDIOGRAM_FREQS: [f64; 6] = [250.0, 500.0, 1000.0, 2000.0, 4000.0, 6000.0];

/// Maximal loudness threshold in dB.
pub const THETA_DB: f64 = 105.0;

/// Envelope floor applied before exponentiation.
pub const ENVELOPE_FLOOR: f64 = 1e-9;

/// Hearing thresholds (dB HL) at the standard audiogram frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Audiogram {
    pub freqs: Vec<f64>,
    pub thresholds_db: Vec<f64>,
}

impl Audiogram {
    /// Audiogram at [`AUDIOGRAM_FREQS`]; thresholds must be non-decreasing and in `[0, theta)`.
    pub fn new(thresholds_db: [f64; 6]) -> Result<Self> {
        let ag = Self {
            freqs: AUDIOGRAM_FREQS.to_vec(),
            thresholds_db: thresholds_db.to_vec(),
        };
        ag.validate()?;
        Ok(ag)
    }

    /// No hearing loss.
    pub fn normal() -> Self {
        Self {
            freqs: AUDIOGRAM_FREQS.to_vec(),
            thresholds_db: vec![0.0; 6],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.freqs.len() != self.thresholds_db.len() || self.freqs.is_empty() {
            return Err(Error::Param(format!(
                "audiogram has {} frequencies but {} thresholds",
                self.freqs.len(),
                self.thresholds_db.len()
            )));
        }
        if self.freqs.windows(2).any(|w| w[1] <= w[0]) || self.freqs[0] <= 0.0 {
            return Err(Error::Param(
                "audiogram frequencies must be positive and ascending".into(),
            ));
        }
        if let Some(&hl) = self
            .thresholds_db
            .iter()
            .find(|&&hl| !(0.0..THETA_DB).contains(&hl))
        {
            return Err(Error::Domain(format!(
                "threshold {hl} dB outside [0, {THETA_DB})"
            )));
        }
        if self.thresholds_db.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Param(
                "audiogram thresholds must be non-decreasing".into(),
            ));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ag: Audiogram = serde_json::from_str(text)?;
        ag.validate()?;
        Ok(ag)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("audiogram serialises")
    }
}

/// Exponent `theta / (theta - hl) - 1`, evaluated as `hl / (theta - hl)`.
pub fn recruitment_exponent(hl: f64, theta: f64) -> Result<f64> {
    if !(hl >= 0.0 && hl < theta) {
        return Err(Error::Domain(format!(
            "hearing level {hl} dB must lie in [0, {theta})"
        )));
    }
    Ok(hl / (theta - hl))
}

/// Threshold at `fc`, linear in log-frequency between knots and held constant
/// outside the audiogram range.
pub fn interpolate_hl(ag: &Audiogram, fc: f64) -> f64 {
    let f = &ag.freqs;
    let t = &ag.thresholds_db;
    if fc <= f[0] {
        return t[0];
    }
    if fc >= f[f.len() - 1] {
        return t[t.len() - 1];
    }
    let k = f.partition_point(|&x| x <= fc) - 1;
    let frac = (fc / f[k]).ln() / (f[k + 1] / f[k]).ln();
    t[k] + frac * (t[k + 1] - t[k])
}

/// Envelope magnitude corresponding to `theta` under `cal`.
pub fn reference_envelope(cal: Calibration) -> f64 {
    cal.spl_to_amplitude(THETA_DB)
}

/// Per-sample gain for one channel.
#[inline]
pub fn recruitment_gain(envelope: f64, e_theta: f64, exponent: f64) -> f64 {
    (envelope.max(ENVELOPE_FLOOR) / e_theta).powf(exponent)
}

/// Recombines a decomposition with envelope-dependent channel gains.
pub fn recruit(
    dec: &ChannelDecomposition,
    ag: &Audiogram,
    fb: &GammatoneFilterbank,
    cal: Calibration,
) -> Result<AudioBuffer> {
    ag.validate()?;
    if dec.n_channels() != fb.len() || dec.envelopes.len() != fb.len() {
        return Err(Error::Dimension {
            expected: format!("{} channels", fb.len()),
            got: format!("{} channels", dec.n_channels()),
        });
    }
    let e_theta = reference_envelope(cal);
    let len = dec.len();
    let mut y = vec![0.0; len];
    for ((ch, x), env) in fb
        .channels()
        .iter()
        .zip(&dec.fine_structure)
        .zip(&dec.envelopes)
    {
        let k = recruitment_exponent(interpolate_hl(ag, ch.center_hz), THETA_DB)?;
        if k == 0.0 {
            for (acc, v) in y.iter_mut().zip(x) {
                *acc += v;
            }
        } else {
            for ((acc, v), e) in y.iter_mut().zip(x).zip(env) {
                *acc += recruitment_gain(*e, e_theta, k) * v;
            }
        }
    }
    AudioBuffer::from_f64(&y, fb.sample_rate())
}

/// Gammatone analysis followed by [`recruit`]. Output length equals input length.
pub fn apply_loudness_recruitment(
    buf: &AudioBuffer,
    ag: &Audiogram,
    fb: &GammatoneFilterbank,
    cal: Calibration,
) -> Result<AudioBuffer> {
    ag.validate()?;
    let dec = analyze(buf, fb)?;
    recruit(&dec, ag, fb, cal)
}
