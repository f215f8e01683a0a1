//! Short-time Fourier analysis and window-sum normalised overlap-add resynthesis.
//!
//! Frames are centred: the signal is zero-padded by half a frame on each side
//! so every original sample is covered by the full overlap of the window.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};

/// Tapering window used for analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Window {
    /// Periodic Hann.
    Hann,
    /// Periodic Hamming.
    Hamming,
}

impl Window {
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        let (a0, a1) = match self {
            Window::Hann => (0.5, 0.5),
            Window::Hamming => (0.54, 0.46),
        };
        (0..len)
            .map(|n| a0 - a1 * (2.0 * PI * n as f64 / len as f64).cos())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StftConfig {
    pub frame_len: usize,
    pub hop: usize,
    pub window: Window,
}

impl Default for StftConfig {
    /// 512-sample Hann frames with 50% overlap (32 ms / 16 ms at 16 kHz).
    fn default() -> Self {
        Self {
            frame_len: 512,
            hop: 256,
            window: Window::Hann,
        }
    }
}

impl StftConfig {
    /// Checks that the periodic window overlap-adds to a constant at this hop.
    pub fn validate(&self) -> Result<()> {
        if self.frame_len < 2 || !self.frame_len.is_multiple_of(2) {
            return Err(Error::Param(format!(
                "frame length must be even and >= 2, got {}",
                self.frame_len
            )));
        }
        if self.hop == 0
            || !self.frame_len.is_multiple_of(self.hop)
            || self.frame_len / self.hop < 2
        {
            return Err(Error::Param(format!(
                "hop {} must divide frame length {} at least twice for constant overlap-add",
                self.hop, self.frame_len
            )));
        }
        Ok(())
    }

    pub fn n_bins(&self) -> usize {
        self.frame_len / 2 + 1
    }

    /// Centre frequency in Hz of every bin.
    pub fn bin_freqs(&self, sample_rate: u32) -> Vec<f64> {
        let df = sample_rate as f64 / self.frame_len as f64;
        (0..self.n_bins()).map(|k| k as f64 * df).collect()
    }

    /// Number of frames produced for a signal of `len` samples.
    pub fn n_frames(&self, len: usize) -> usize {
        1 + len.div_ceil(self.hop)
    }
}

/// Complex spectrogram, frames × bins.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub frames: Vec<Vec<Complex64>>,
    pub n_bins: usize,
}

impl Spectrogram {
    pub fn n_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn power(&self) -> Vec<Vec<f64>> {
        self.frames
            .iter()
            .map(|f| f.iter().map(|c| c.norm_sqr()).collect())
            .collect()
    }
}

pub(crate) struct StftPlan {
    cfg: StftConfig,
    window: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl StftPlan {
    pub(crate) fn new(cfg: StftConfig) -> Result<Self> {
        cfg.validate()?;
        let mut planner = FftPlanner::new();
        Ok(Self {
            window: cfg.window.coefficients(cfg.frame_len),
            forward: planner.plan_fft_forward(cfg.frame_len),
            inverse: planner.plan_fft_inverse(cfg.frame_len),
            cfg,
        })
    }

    pub(crate) fn analyze(&self, x: &[f64]) -> Spectrogram {
        let n = self.cfg.frame_len;
        let half = n / 2;
        let n_frames = self.cfg.n_frames(x.len());
        let mut buf = vec![Complex64::default(); n];
        let frames = (0..n_frames)
            .map(|m| {
                // frame m covers original samples [m*hop - half, m*hop + half)
                let start = (m * self.cfg.hop) as isize - half as isize;
                for (k, slot) in buf.iter_mut().enumerate() {
                    let t = start + k as isize;
                    let s = if t >= 0 && (t as usize) < x.len() {
                        x[t as usize]
                    } else {
                        0.0
                    };
                    *slot = Complex64::new(s * self.window[k], 0.0);
                }
                self.forward.process(&mut buf);
                buf[..self.cfg.n_bins()].to_vec()
            })
            .collect();
        Spectrogram {
            frames,
            n_bins: self.cfg.n_bins(),
        }
    }

    pub(crate) fn synthesize(&self, spec: &Spectrogram, out_len: usize) -> Result<Vec<f64>> {
        let n = self.cfg.frame_len;
        let half = n / 2;
        let nb = self.cfg.n_bins();
        if spec.n_bins != nb {
            return Err(Error::Dimension {
                expected: format!("{nb} bins"),
                got: format!("{} bins", spec.n_bins),
            });
        }
        if let Some(bad) = spec.frames.iter().find(|f| f.len() != nb) {
            return Err(Error::Dimension {
                expected: format!("{nb} bins per frame"),
                got: format!("{} bins", bad.len()),
            });
        }
        let mut acc = vec![0.0; out_len];
        let mut wsum = vec![0.0; out_len];
        let mut buf = vec![Complex64::default(); n];
        let scale = 1.0 / n as f64;
        for (m, frame) in spec.frames.iter().enumerate() {
            buf[..nb].copy_from_slice(frame);
            // Hermitian completion; DC and Nyquist must be real for a real frame.
            buf[0].im = 0.0;
            buf[half].im = 0.0;
            for k in 1..half {
                buf[n - k] = frame[k].conj();
            }
            self.inverse.process(&mut buf);
            let start = (m * self.cfg.hop) as isize - half as isize;
            for (k, (v, w)) in buf.iter().zip(&self.window).enumerate() {
                let t = start + k as isize;
                if t < 0 || t as usize >= out_len {
                    continue;
                }
                acc[t as usize] += v.re * scale;
                wsum[t as usize] += w;
            }
        }
        Ok(acc
            .into_iter()
            .zip(wsum)
            .map(|(a, w)| if w > 1e-10 { a / w } else { 0.0 })
            .collect())
    }
}

/// Forward STFT of a buffer. Signals shorter than a frame are zero-padded.
pub fn stft(buf: &AudioBuffer, cfg: StftConfig) -> Result<Spectrogram> {
    if buf.is_empty() {
        return Err(Error::Param("cannot analyse an empty buffer".into()));
    }
    Ok(StftPlan::new(cfg)?.analyze(&buf.to_f64()))
}

/// Inverse STFT by overlap-add, normalised by the summed analysis window and
/// truncated or zero-padded to `out_len` samples.
pub fn istft(
    spec: &Spectrogram,
    cfg: StftConfig,
    sample_rate: u32,
    out_len: usize,
) -> Result<AudioBuffer> {
    let y = StftPlan::new(cfg)?.synthesize(spec, out_len)?;
    AudioBuffer::from_f64(&y, sample_rate)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn snr_db(reference: &[f64], test: &[f64]) -> f64 {
        let sig: f64 = reference.iter().map(|v| v * v).sum();
        let err: f64 = reference
            .iter()
            .zip(test)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        10.0 * (sig / err.max(1e-300)).log10()
    }

    #[test]
    fn rejects_non_cola_configs() {
        let bad = [(511, 256), (512, 0), (512, 512), (512, 200)];
        for (frame_len, hop) in bad {
            let cfg = StftConfig {
                frame_len,
                hop,
                window: Window::Hann,
            };
            assert!(cfg.validate().is_err(), "{frame_len}/{hop}");
        }
        assert!(StftConfig::default().validate().is_ok());
    }

    #[test]
    fn impulse_at_frame_centre_is_flat() {
        let cfg = StftConfig::default();
        // frame 4 is centred on sample 4*256
        let mut x = vec![0.0f32; 4096];
        x[4 * 256] = 1.0;
        let spec = stft(&AudioBuffer::new(x, 16000).unwrap(), cfg).unwrap();
        for c in &spec.frames[4] {
            assert!((c.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sine_at_bin_centre_concentrates() {
        let cfg = StftConfig::default();
        let k0 = 40;
        let f = k0 as f64 * 16000.0 / 512.0;
        let x: Vec<f64> = (0..8000)
            .map(|n| (2.0 * PI * f * n as f64 / 16000.0).sin())
            .collect();
        let spec = stft(&AudioBuffer::from_f64(&x, 16000).unwrap(), cfg).unwrap();
        let frame = &spec.frames[10];
        let peak = frame
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .unwrap()
            .0;
        assert_eq!(peak, k0);
        let total: f64 = frame.iter().map(|c| c.norm_sqr()).sum();
        let near: f64 = frame[k0 - 1..=k0 + 1].iter().map(|c| c.norm_sqr()).sum();
        assert!(near / total > 0.999);
    }

    #[test]
    fn white_noise_round_trip() {
        use rand_core::{RngCore, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let x: Vec<f64> = (0..16000)
            .map(|_| (rng.next_u32() as f64 / u32::MAX as f64) * 2.0 - 1.0)
            .collect();
        let plan = StftPlan::new(StftConfig::default()).unwrap();
        let y = plan.synthesize(&plan.analyze(&x), x.len()).unwrap();
        assert!(snr_db(&x, &y) >= 60.0);
    }

    #[test]
    fn short_signal_is_padded() {
        let x: Vec<f32> = (0..100).map(|n| (n as f32 * 0.1).sin() * 0.5).collect();
        let buf = AudioBuffer::new(x.clone(), 16000).unwrap();
        let cfg = StftConfig::default();
        let spec = stft(&buf, cfg).unwrap();
        let y = istft(&spec, cfg, 16000, x.len()).unwrap();
        for (a, b) in x.iter().zip(y.samples()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_spectrogram_gives_silence() {
        let cfg = StftConfig::default();
        let spec = Spectrogram {
            frames: vec![vec![Complex64::default(); 257]; 10],
            n_bins: 257,
        };
        let y = istft(&spec, cfg, 16000, 2000).unwrap();
        assert!(y.samples().iter().all(|&s| s == 0.0));
    }

    #[test]
    fn single_frame_reproduced() {
        let cfg = StftConfig::default();
        let plan = StftPlan::new(cfg).unwrap();
        let x: Vec<f64> = (0..256)
            .map(|n| ((n * 37 % 101) as f64 / 101.0) - 0.5)
            .collect();
        let full = plan.analyze(&x);
        let one = Spectrogram {
            frames: vec![full.frames[0].clone()],
            n_bins: full.n_bins,
        };
        // the first frame spans [-256, 256); its second half is the first 256 samples
        let y = plan.synthesize(&one, 256).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-9, "{a} {b}");
        }
    }

    #[test]
    fn inconsistent_dims_rejected() {
        let cfg = StftConfig::default();
        let spec = Spectrogram {
            frames: vec![vec![Complex64::default(); 100]],
            n_bins: 100,
        };
        assert!(matches!(
            istft(&spec, cfg, 16000, 10),
            Err(Error::Dimension { .. })
        ));
        assert!(stft(&AudioBuffer::new(vec![], 16000).unwrap(), cfg).is_err());
    }
}
