//! 80-channel log-mel filterbank features and SpecAugment-style masking.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};
use crate::gammatone::{hz_to_mel, mel_to_hz};
use crate::sampling::RandomStream;
use crate::stft::Window;

pub const N_MELS: usize = 80;
pub const FRAME_SECS: f64 = 0.025;
pub const STRIDE_SECS: f64 = 0.010;
/// Energies are floored here before the log.
pub const ENERGY_FLOOR: f64 = 1e-10;

pub const MAX_MASKS_PER_AXIS: usize = 2;
pub const MAX_FREQ_MASK_WIDTH: usize = 30;
pub const MAX_TIME_MASK_WIDTH: usize = 40;

/// Row-major frames × channels matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    data: Vec<f32>,
    frames: usize,
    channels: usize,
}

impl FeatureMatrix {
    pub fn new(data: Vec<f32>, frames: usize, channels: usize) -> Result<Self> {
        if data.len() != frames * channels {
            return Err(Error::Dimension {
                expected: format!("{frames}x{channels}"),
                got: format!("{} values", data.len()),
            });
        }
        Ok(Self {
            data,
            frames,
            channels,
        })
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn frame(&self, t: usize) -> &[f32] {
        &self.data[t * self.channels..(t + 1) * self.channels]
    }

    pub fn get(&self, t: usize, c: usize) -> f32 {
        self.data[t * self.channels + c]
    }

    fn set(&mut self, t: usize, c: usize, v: f32) {
        self.data[t * self.channels + c] = v;
    }

    /// Raw little-endian `f32`, row-major.
    pub fn write_raw<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for v in &self.data {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }
}

/// JSON sidecar describing a raw feature dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSidecar {
    pub frames: usize,
    pub channels: usize,
    pub sample_rate: u32,
    pub utterance_id: String,
}

/// Writes `<stem>.f32` and `<stem>.json` next to each other.
pub fn dump_features(
    feat: &FeatureMatrix,
    stem: &Path,
    sample_rate: u32,
    utterance_id: &str,
) -> Result<()> {
    let raw = stem.with_extension("f32");
    let json = stem.with_extension("json");
    let mut bytes = Vec::with_capacity(feat.data.len() * 4);
    feat.write_raw(&mut bytes).map_err(|e| Error::io(&raw, e))?;
    std::fs::write(&raw, bytes).map_err(|e| Error::io(&raw, e))?;
    let side = FeatureSidecar {
        frames: feat.frames,
        channels: feat.channels,
        sample_rate,
        utterance_id: utterance_id.to_owned(),
    };
    std::fs::write(&json, serde_json::to_vec(&side)?).map_err(|e| Error::io(&json, e))?;
    Ok(())
}

/// Triangular mel filters over the bins of an `n_fft`-point spectrum, edges
/// equally spaced on the mel scale from 0 Hz to Nyquist. Each filter is
/// normalised to unit weight sum, so a flat spectrum maps to flat energies.
#[derive(Debug, Clone)]
pub struct MelFilterbank {
    /// (first bin, weights) per filter.
    filters: Vec<(usize, Vec<f64>)>,
}

impl MelFilterbank {
    pub fn new(n_mels: usize, n_fft: usize, sample_rate: u32) -> Self {
        let nyquist = sample_rate as f64 / 2.0;
        let n_bins = n_fft / 2 + 1;
        let df = sample_rate as f64 / n_fft as f64;
        let m_hi = hz_to_mel(nyquist);
        let edges: Vec<f64> = (0..n_mels + 2)
            .map(|i| mel_to_hz(m_hi * i as f64 / (n_mels + 1) as f64))
            .collect();
        let filters = (0..n_mels)
            .map(|m| {
                let (lo, c, hi) = (edges[m], edges[m + 1], edges[m + 2]);
                let mut w: Vec<(usize, f64)> = (0..n_bins)
                    .filter_map(|k| {
                        let f = k as f64 * df;
                        let v = if f > lo && f <= c {
                            (f - lo) / (c - lo)
                        } else if f > c && f < hi {
                            (hi - f) / (hi - c)
                        } else {
                            0.0
                        };
                        (v > 0.0).then_some((k, v))
                    })
                    .collect();
                if w.is_empty() {
                    // narrower than a bin: take the nearest one
                    w.push((((c / df).round() as usize).min(n_bins - 1), 1.0));
                }
                let sum: f64 = w.iter().map(|(_, v)| v).sum();
                let first = w[0].0;
                let mut dense = vec![0.0; w[w.len() - 1].0 - first + 1];
                for (k, v) in w {
                    dense[k - first] = v / sum;
                }
                (first, dense)
            })
            .collect();
        Self { filters }
    }

    pub fn n_mels(&self) -> usize {
        self.filters.len()
    }

    pub fn apply(&self, power: &[f64]) -> Vec<f64> {
        self.filters
            .iter()
            .map(|(first, w)| w.iter().zip(&power[*first..]).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Log mel energies with 25 ms Hamming frames every 10 ms. Signals shorter
/// than one frame give zero frames.
pub fn mel_features(buf: &AudioBuffer) -> FeatureMatrix {
    let fs = buf.sample_rate();
    let win_len = (FRAME_SECS * fs as f64).round() as usize;
    let hop = (STRIDE_SECS * fs as f64).round() as usize;
    let n_fft = win_len.next_power_of_two();
    let frames = if buf.len() >= win_len {
        (buf.len() - win_len) / hop + 1
    } else {
        0
    };
    let window = Window::Hamming.coefficients(win_len);
    let mel = MelFilterbank::new(N_MELS, n_fft, fs);
    let fft = FftPlanner::new().plan_fft_forward(n_fft);
    let x = buf.samples();
    let mut scratch = vec![Complex64::default(); n_fft];
    let mut data = Vec::with_capacity(frames * N_MELS);
    for t in 0..frames {
        let seg = &x[t * hop..t * hop + win_len];
        scratch.fill(Complex64::default());
        for (s, (&v, &w)) in scratch.iter_mut().zip(seg.iter().zip(&window)) {
            s.re = v as f64 * w;
        }
        fft.process(&mut scratch);
        let power: Vec<f64> = scratch[..n_fft / 2 + 1]
            .iter()
            .map(|c| c.norm_sqr())
            .collect();
        data.extend(
            mel.apply(&power)
                .into_iter()
                .map(|e| e.max(ENERGY_FLOOR).ln() as f32),
        );
    }
    FeatureMatrix {
        data,
        frames,
        channels: N_MELS,
    }
}

/// Subtracts each channel's mean over frames.
pub fn mean_normalize(feat: &FeatureMatrix) -> FeatureMatrix {
    let mut out = feat.clone();
    if feat.frames == 0 {
        return out;
    }
    for c in 0..feat.channels {
        let mean =
            (0..feat.frames).map(|t| feat.get(t, c) as f64).sum::<f64>() / feat.frames as f64;
        for t in 0..feat.frames {
            out.set(t, c, (feat.get(t, c) as f64 - mean) as f32);
        }
    }
    out
}

/// Mask placements as `(start, width)` pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskPlan {
    pub freq_masks: Vec<(usize, usize)>,
    pub time_masks: Vec<(usize, usize)>,
}

impl MaskPlan {
    /// Up to two masks per axis, widths up to 30 channels and 40 frames,
    /// clamped to the matrix size.
    pub fn draw(rng: &mut RandomStream, frames: usize, channels: usize) -> Self {
        let mut axis = |extent: usize, max_width: usize| {
            let n = rng.uniform_int(MAX_MASKS_PER_AXIS);
            (0..n)
                .map(|_| {
                    let w = rng.uniform_int(max_width).min(extent);
                    let start = rng.uniform_int(extent - w);
                    (start, w)
                })
                .collect::<Vec<_>>()
        };
        let freq_masks = axis(channels, MAX_FREQ_MASK_WIDTH);
        let time_masks = axis(frames, MAX_TIME_MASK_WIDTH);
        Self {
            freq_masks,
            time_masks,
        }
    }

    /// Zeroes the masked cells.
    pub fn apply(&self, feat: &FeatureMatrix) -> FeatureMatrix {
        let mut out = feat.clone();
        for &(start, w) in &self.freq_masks {
            for c in start..(start + w).min(feat.channels) {
                for t in 0..feat.frames {
                    out.set(t, c, 0.0);
                }
            }
        }
        for &(start, w) in &self.time_masks {
            for t in start..(start + w).min(feat.frames) {
                for c in 0..feat.channels {
                    out.set(t, c, 0.0);
                }
            }
        }
        out
    }
}

/// Mean-normalises `feat` and applies randomly drawn frequency and time masks.
pub fn spec_augment_mask(feat: &FeatureMatrix, rng: &mut RandomStream) -> FeatureMatrix {
    let plan = MaskPlan::draw(rng, feat.frames, feat.channels);
    plan.apply(&mean_normalize(feat))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::derive_stream;
    use crate::synth;

    #[test]
    fn frame_count() {
        let buf = AudioBuffer::new(vec![0.0; 16000], 16000).unwrap();
        let f = mel_features(&buf);
        assert_eq!(f.frames(), 98);
        assert_eq!(f.channels(), 80);
        let floor = (ENERGY_FLOOR.ln()) as f32;
        assert!(f.data().iter().all(|&v| v == floor));
        let short = AudioBuffer::new(vec![0.0; 399], 16000).unwrap();
        assert_eq!(mel_features(&short).frames(), 0);
    }

    #[test]
    fn every_filter_sees_a_bin() {
        for (n_fft, fs) in [(512, 16000), (256, 8000), (1024, 44100)] {
            let mel = MelFilterbank::new(80, n_fft, fs);
            let flat = vec![1.0; n_fft / 2 + 1];
            for e in mel.apply(&flat) {
                assert!((e - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn white_noise_is_flat() {
        let buf = synth::white_noise(0.1, 2.0, 16000, 3).unwrap();
        let f = mel_features(&buf);
        assert!(f.data().iter().all(|v| v.is_finite()));
        let means: Vec<f64> = (0..80)
            .map(|c| (0..f.frames()).map(|t| f.get(t, c) as f64).sum::<f64>() / f.frames() as f64)
            .collect();
        let grand = means.iter().sum::<f64>() / 80.0;
        // log of averaged chi-square energies; narrow low bands are noisier
        for (c, m) in means.iter().enumerate() {
            assert!((m - grand).abs() < 0.5, "band {c}: {m} vs {grand}");
        }
    }

    #[test]
    fn zero_width_masks_leave_normalised_input() {
        let buf = synth::white_noise(0.1, 1.0, 16000, 4).unwrap();
        let f = mel_features(&buf);
        let plan = MaskPlan {
            freq_masks: vec![(10, 0)],
            time_masks: vec![(5, 0)],
        };
        let norm = mean_normalize(&f);
        assert_eq!(plan.apply(&norm), norm);
    }

    #[test]
    fn full_width_frequency_mask() {
        let buf = synth::white_noise(0.1, 1.0, 16000, 5).unwrap();
        let norm = mean_normalize(&mel_features(&buf));
        let plan = MaskPlan {
            freq_masks: vec![(25, 30)],
            time_masks: vec![],
        };
        let out = plan.apply(&norm);
        let zeroed: Vec<usize> = (0..80)
            .filter(|&c| (0..out.frames()).all(|t| out.get(t, c) == 0.0))
            .collect();
        assert_eq!(zeroed, (25..55).collect::<Vec<_>>());
    }

    #[test]
    fn drawn_masks_respect_bounds_and_repeat() {
        for i in 0..500 {
            let id = i.to_string();
            let a = MaskPlan::draw(&mut derive_stream(1, &id), 50, 80);
            let b = MaskPlan::draw(&mut derive_stream(1, &id), 50, 80);
            assert_eq!(a, b);
            assert!(a.freq_masks.len() <= 2 && a.time_masks.len() <= 2);
            for &(s, w) in &a.freq_masks {
                assert!(w <= 30 && s + w <= 80);
            }
            for &(s, w) in &a.time_masks {
                assert!(w <= 40 && s + w <= 50);
            }
        }
        // widths clamp to tiny matrices
        let p = MaskPlan::draw(&mut derive_stream(2, "tiny"), 3, 80);
        assert!(p.time_masks.iter().all(|&(s, w)| s + w <= 3));
    }

    #[test]
    fn mean_normalised_channels_are_zero_mean() {
        let buf = synth::white_noise(0.1, 1.0, 16000, 6).unwrap();
        let n = mean_normalize(&mel_features(&buf));
        for c in 0..80 {
            let m: f64 =
                (0..n.frames()).map(|t| n.get(t, c) as f64).sum::<f64>() / n.frames() as f64;
            assert!(m.abs() < 1e-4);
        }
    }
}
