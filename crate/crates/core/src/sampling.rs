//! Severity-conditioned random hearing-impairment parameters.
//!
//! Every utterance draws from its own [`RandomStream`], seeded by a SHA-256
//! hash of `(master_seed, utterance_id)`, so parameters are independent of
//! processing order and worker count.

use std::fmt;
use std::str::FromStr;

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Error;
use crate::recruitment::{Audiogram, AUDIOGRAM_FREQS};
use crate::smearing::SmearingParams;

/// Lower bound for the lower broadening factor.
pub const R_L_MIN: f64 = 1.001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Mild,
    Moderate,
    Severe,
}

impl Severity {
    pub const ALL: [Severity; 3] = [Severity::Mild, Severity::Moderate, Severity::Severe];

    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Mild => "mild",
            Severity::Moderate => "moderate",
            Severity::Severe => "severe",
        }
    }
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Severity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "mild" => Ok(Severity::Mild),
            "moderate" => Ok(Severity::Moderate),
            "severe" => Ok(Severity::Severe),
            other => Err(Error::Param(format!(
                "unknown severity '{other}' (expected mild, moderate or severe)"
            ))),
        }
    }
}

/// Upper bounds of the sampling ranges for one severity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeverityLimits {
    pub r_l_max: f64,
    pub r_u_max: f64,
    /// Highest thresholds (dB) at [`AUDIOGRAM_FREQS`].
    pub hl_max: [f64; 6],
}

pub fn severity_limits(s: Severity) -> SeverityLimits {
    match s {
        Severity::Mild => SeverityLimits {
            r_l_max: 1.1,
            r_u_max: 1.6,
            hl_max: [10.0, 10.0, 10.0, 15.0, 30.0, 40.0],
        },
        Severity::Moderate => SeverityLimits {
            r_l_max: 1.6,
            r_u_max: 2.4,
            hl_max: [20.0, 20.0, 25.0, 35.0, 45.0, 50.0],
        },
        Severity::Severe => SeverityLimits {
            r_l_max: 2.0,
            r_u_max: 4.0,
            hl_max: [55.0, 55.0, 55.0, 65.0, 75.0, 80.0],
        },
    }
}

/// A deterministic ChaCha20 stream tagged with the label it was derived from.
#[derive(Debug, Clone)]
pub struct RandomStream {
    rng: ChaCha20Rng,
    stream_id: String,
}

/// Seeds a stream from `(master_seed, utterance_id)`.
pub fn derive_stream(master_seed: u64, utterance_id: &str) -> RandomStream {
    let mut h = Sha256::new();
    h.update(master_seed.to_le_bytes());
    h.update((utterance_id.len() as u64).to_le_bytes());
    h.update(utterance_id.as_bytes());
    let seed: [u8; 32] = h.finalize().into();
    RandomStream {
        rng: ChaCha20Rng::from_seed(seed),
        stream_id: utterance_id.to_owned(),
    }
}

impl RandomStream {
    pub fn stream_id(&self) -> &str {
        &self.stream_id
    }

    /// Uniform in [0, 1) with 53 bits of resolution.
    pub fn next_unit(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`. Returns `lo` when the interval is empty.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        let u = self.next_unit();
        if hi <= lo {
            return lo;
        }
        let v = lo + u * (hi - lo);
        // rounding can land exactly on `hi`
        if v >= hi {
            lo
        } else {
            v
        }
    }

    /// Uniform integer in `0..=max`.
    pub fn uniform_int(&mut self, max: usize) -> usize {
        let v = (self.next_unit() * (max as f64 + 1.0)) as usize;
        v.min(max)
    }
}

pub fn sample_smearing_params(s: Severity, rng: &mut RandomStream) -> SmearingParams {
    let lim = severity_limits(s);
    let r_l = rng.uniform(R_L_MIN, lim.r_l_max);
    let r_u = rng.uniform(r_l, lim.r_u_max);
    SmearingParams { r_l, r_u }
}

/// A sampled audiogram and whether any frequency had an empty range.
#[derive(Debug, Clone, PartialEq)]
pub struct AudiogramDraw {
    pub audiogram: Audiogram,
    pub degenerate: bool,
}

/// Draws thresholds in ascending frequency, each in `[running_max, hl_max)`.
pub fn sample_audiogram(s: Severity, rng: &mut RandomStream) -> AudiogramDraw {
    let lim = severity_limits(s);
    let mut running_max = 0.0f64;
    let mut degenerate = false;
    let mut thresholds = Vec::with_capacity(AUDIOGRAM_FREQS.len());
    for &hi in &lim.hl_max {
        let hl = if running_max >= hi {
            degenerate = true;
            // keep the stream position independent of the outcome
            rng.next_unit();
            running_max
        } else {
            rng.uniform(running_max, hi)
        };
        running_max = running_max.max(hl);
        thresholds.push(hl);
    }
    AudiogramDraw {
        audiogram: Audiogram {
            freqs: AUDIOGRAM_FREQS.to_vec(),
            thresholds_db: thresholds,
        },
        degenerate,
    }
}
