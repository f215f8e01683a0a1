//! Mel-spaced fourth-order gammatone filterbank.
//!
//! Each channel is a cascade of four identical complex one-pole sections with
//! pole `exp(-2 pi b / fs + j 2 pi fc / fs)`, whose impulse response is a
//! sampled `t^3 exp(-2 pi b t) exp(j 2 pi fc t)`. The real part of the output,
//! advanced by the envelope peak delay and phase-rotated so the carrier is in
//! cosine phase at that peak, is the channel's unit-gain output.
//!
//! Neighbouring channels overlap by about one ERB, so their plain sum has
//! roughly 1.5x gain with ripple. Each channel therefore carries a synthesis
//! weight, fitted by least squares so that the weighted sum of the aligned
//! channel responses is close to 1 between the lowest and highest centre.
//! Fine structure is the weighted channel output; envelopes are taken from the
//! unit-gain output so that they stay calibrated to the input level.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::audio::AudioBuffer;
use crate::envelope::{hilbert_envelope, Biquad};
use crate::error::{Error, Result};
use crate::smearing::erb_factor;

/// Filter order.
pub const ORDER: usize = 4;

pub const DEFAULT_CHANNELS: usize = 32;
pub const DEFAULT_F_MIN: f64 = 80.0;

/// Frequency grid size for the synthesis-weight fit.
const WEIGHT_FIT_POINTS: usize = 2048;

/// Upper limit for envelope smoothing cutoffs in Hz.
pub const MAX_ENVELOPE_CUTOFF: f64 = 100.0;

pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Gammatone bandwidth parameter `b = 1.019 * 24.7 * (0.00437 fc + 1)` in Hz.
pub fn gammatone_bandwidth(fc: f64) -> f64 {
    1.019 * 24.7 * erb_factor(fc)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammatoneChannel {
    pub center_hz: f64,
    pub bandwidth_hz: f64,
    /// Envelope peak delay `(N - 1) / (2 pi b)` in samples, rounded.
    pub peak_delay: usize,
    /// Weight applied to this channel's output in the fine structure.
    pub synthesis_weight: f64,
    pole: Complex64,
    rotation: Complex64,
    gain: f64,
}

impl GammatoneChannel {
    fn new(center_hz: f64, sample_rate: f64) -> Self {
        let bandwidth_hz = gammatone_bandwidth(center_hz);
        let peak_delay =
            (sample_rate * (ORDER as f64 - 1.0) / (2.0 * PI * bandwidth_hz)).round() as usize;
        let w = 2.0 * PI * center_hz / sample_rate;
        let r = (-2.0 * PI * bandwidth_hz / sample_rate).exp();
        let pole = Complex64::from_polar(r, w);
        let rotation = Complex64::from_polar(1.0, -w * peak_delay as f64);
        let mut ch = Self {
            center_hz,
            bandwidth_hz,
            peak_delay,
            synthesis_weight: 1.0,
            pole,
            rotation,
            gain: 1.0,
        };
        ch.gain = 1.0 / ch.response(w).norm();
        ch
    }

    /// Frequency response of the real unit-gain output at normalised angular
    /// frequency `w`, before the alignment advance.
    pub fn response(&self, w: f64) -> Complex64 {
        let section = |w: f64| {
            let d = Complex64::new(1.0, 0.0) - self.pole * Complex64::from_polar(1.0, -w);
            d.powi(-(ORDER as i32))
        };
        (self.rotation * section(w) + (self.rotation * section(-w)).conj()) * (0.5 * self.gain)
    }

    /// Response including the alignment advance.
    pub fn aligned_response(&self, w: f64) -> Complex64 {
        self.response(w) * Complex64::from_polar(1.0, w * self.peak_delay as f64)
    }

    /// Filters `x` and returns the aligned unit-gain output, same length as `x`.
    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        let mut state = [Complex64::default(); ORDER];
        let mut out = vec![0.0; x.len()];
        for (n, &v) in x.iter().enumerate() {
            let mut acc = Complex64::new(v, 0.0);
            for s in state.iter_mut() {
                *s = acc + self.pole * *s;
                acc = *s;
            }
            if n >= self.peak_delay {
                out[n - self.peak_delay] = (self.rotation * acc).re * self.gain;
            }
        }
        out
    }

    /// Envelope smoothing cutoff, `min(b / 2, 100 Hz)`.
    pub fn envelope_cutoff(&self) -> f64 {
        (self.bandwidth_hz / 2.0).min(MAX_ENVELOPE_CUTOFF)
    }
}

/// An immutable bank of gammatone channels designed for one sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct GammatoneFilterbank {
    channels: Vec<GammatoneChannel>,
    sample_rate: u32,
}

impl GammatoneFilterbank {
    /// 32 channels from 80 Hz to `min(8000, 0.95 * nyquist)`.
    pub fn for_sample_rate(sample_rate: u32) -> Result<Self> {
        let f_max = (0.95 * sample_rate as f64 / 2.0).min(8000.0);
        design_filterbank(DEFAULT_CHANNELS, DEFAULT_F_MIN, f_max, sample_rate)
    }

    pub fn channels(&self) -> &[GammatoneChannel] {
        &self.channels
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }
}

/// Designs `n_channels` gammatone filters with centres equally spaced on the
/// mel scale between `f_min` and `f_max`, each with unit gain at its centre.
pub fn design_filterbank(
    n_channels: usize,
    f_min: f64,
    f_max: f64,
    sample_rate: u32,
) -> Result<GammatoneFilterbank> {
    let nyquist = sample_rate as f64 / 2.0;
    if n_channels == 0 {
        return Err(Error::Param("filterbank needs at least one channel".into()));
    }
    if !(f_min > 0.0 && f_min < f_max && f_max <= nyquist) {
        return Err(Error::Param(format!(
            "need 0 < f_min < f_max <= {nyquist} Hz, got {f_min}..{f_max}"
        )));
    }
    let (m_lo, m_hi) = (hz_to_mel(f_min), hz_to_mel(f_max));
    let centers: Vec<f64> = if n_channels == 1 {
        vec![mel_to_hz((m_lo + m_hi) / 2.0)]
    } else {
        let step = (m_hi - m_lo) / (n_channels - 1) as f64;
        (0..n_channels)
            .map(|i| mel_to_hz(m_lo + step * i as f64))
            .collect()
    };
    let mut channels: Vec<GammatoneChannel> = centers
        .into_iter()
        .map(|fc| GammatoneChannel::new(fc, sample_rate as f64))
        .collect();
    let weights = fit_synthesis_weights(&channels, sample_rate as f64)?;
    for (ch, w) in channels.iter_mut().zip(weights) {
        ch.synthesis_weight = w;
    }
    Ok(GammatoneFilterbank {
        channels,
        sample_rate,
    })
}

/// Least-squares real weights so that the weighted sum of aligned responses
/// approximates 1 on a linear grid spanning the channel centres.
fn fit_synthesis_weights(channels: &[GammatoneChannel], sample_rate: f64) -> Result<Vec<f64>> {
    let lo = channels[0].center_hz;
    let hi = channels[channels.len() - 1].center_hz;
    let points = if hi > lo { WEIGHT_FIT_POINTS } else { 1 };
    let n = channels.len();
    let mut a = DMatrix::zeros(2 * points, n);
    let mut b = DVector::zeros(2 * points);
    for k in 0..points {
        let f = if points == 1 {
            lo
        } else {
            lo + (hi - lo) * k as f64 / (points - 1) as f64
        };
        let w = 2.0 * PI * f / sample_rate;
        for (j, ch) in channels.iter().enumerate() {
            let h = ch.aligned_response(w);
            a[(k, j)] = h.re;
            a[(points + k, j)] = h.im;
        }
        b[k] = 1.0;
    }
    let svd = a.svd(true, true);
    let x = svd.solve(&b, 1e-12).map_err(|e| Error::Solver {
        condition: f64::NAN,
        reason: format!("synthesis weight fit: {e}"),
    })?;
    Ok(x.iter().copied().collect())
}

/// Per-channel fine structure (synthesis-weighted, aligned) and smoothed
/// envelopes of the unit-gain channel outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDecomposition {
    pub fine_structure: Vec<Vec<f64>>,
    pub envelopes: Vec<Vec<f64>>,
}

impl ChannelDecomposition {
    pub fn n_channels(&self) -> usize {
        self.fine_structure.len()
    }

    pub fn len(&self) -> usize {
        self.fine_structure.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Plain sum of the fine structure over channels.
    pub fn channel_sum(&self) -> Vec<f64> {
        let mut y = vec![0.0; self.len()];
        for x in &self.fine_structure {
            for (acc, v) in y.iter_mut().zip(x) {
                *acc += v;
            }
        }
        y
    }
}

/// Splits `buf` into aligned channel signals and their low-passed Hilbert envelopes.
pub fn analyze(buf: &AudioBuffer, fb: &GammatoneFilterbank) -> Result<ChannelDecomposition> {
    if buf.sample_rate() != fb.sample_rate {
        return Err(Error::Param(format!(
            "buffer rate {} Hz does not match filterbank rate {} Hz",
            buf.sample_rate(),
            fb.sample_rate
        )));
    }
    let x = buf.to_f64();
    let fs = fb.sample_rate as f64;
    let (fine_structure, envelopes) = fb
        .channels
        .par_iter()
        .map(|ch| {
            let unit = ch.filter(&x);
            let lp = Biquad::butterworth_lowpass(ch.envelope_cutoff(), fs);
            let pad = (fs / ch.envelope_cutoff()).ceil() as usize;
            let env = lp
                .filtfilt(&hilbert_envelope(&unit), pad)
                .into_iter()
                .map(|v| v.max(0.0))
                .collect();
            let fine = unit.into_iter().map(|v| v * ch.synthesis_weight).collect();
            (fine, env)
        })
        .unzip();
    Ok(ChannelDecomposition {
        fine_structure,
        envelopes,
    })
}
