//! Envelope extraction: FFT Hilbert transform and zero-phase biquad smoothing.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use rustfft::FftPlanner;

/// Magnitude of the analytic signal of `x`.
///
/// The signal is zero-padded to a power of two; the tail is discarded.
pub fn hilbert_envelope(x: &[f64]) -> Vec<f64> {
    if x.is_empty() {
        return Vec::new();
    }
    let n = x.len().next_power_of_two().max(2);
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut buf: Vec<Complex64> = x
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .chain(std::iter::repeat(Complex64::default()))
        .take(n)
        .collect();
    fwd.process(&mut buf);
    // keep DC and Nyquist, double positive frequencies, zero negative ones
    for c in &mut buf[1..n / 2] {
        *c *= 2.0;
    }
    for c in &mut buf[n / 2 + 1..] {
        *c = Complex64::default();
    }
    inv.process(&mut buf);
    let scale = 1.0 / n as f64;
    buf[..x.len()].iter().map(|c| c.norm() * scale).collect()
}

/// Second-order section in transposed direct form II.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    /// `a[0]` is normalised to 1 and not stored.
    pub a: [f64; 2],
}

impl Biquad {
    /// Butterworth low-pass via the bilinear transform.
    pub fn butterworth_lowpass(cutoff: f64, sample_rate: f64) -> Self {
        let w0 = 2.0 * PI * cutoff / sample_rate;
        let (sin, cos) = w0.sin_cos();
        let alpha = sin / (2.0 / SQRT_2);
        let a0 = 1.0 + alpha;
        let b1 = (1.0 - cos) / a0;
        Self {
            b: [b1 / 2.0, b1, b1 / 2.0],
            a: [-2.0 * cos / a0, (1.0 - alpha) / a0],
        }
    }

    pub fn dc_gain(&self) -> f64 {
        self.b.iter().sum::<f64>() / (1.0 + self.a[0] + self.a[1])
    }

    /// Filters `x`, starting from the steady state for a constant input of `x0`.
    fn run(&self, x: &mut [f64], x0: f64) {
        let g = self.dc_gain();
        let mut z2 = (self.b[2] - self.a[1] * g) * x0;
        let mut z1 = (g - self.b[0]) * x0;
        for v in x.iter_mut() {
            let inp = *v;
            let y = self.b[0] * inp + z1;
            z1 = self.b[1] * inp - self.a[0] * y + z2;
            z2 = self.b[2] * inp - self.a[1] * y;
            *v = y;
        }
    }

    /// Forward-backward (zero-phase) filtering with odd reflection padding of
    /// `pad` samples at each end.
    pub fn filtfilt(&self, x: &[f64], pad: usize) -> Vec<f64> {
        if x.is_empty() {
            return Vec::new();
        }
        let pad = pad.min(x.len() - 1);
        let first = x[0];
        let last = x[x.len() - 1];
        let mut ext = Vec::with_capacity(x.len() + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * first - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * last - x[x.len() - 1 - i]));
        let start = ext[0];
        self.run(&mut ext, start);
        ext.reverse();
        let start = ext[0];
        self.run(&mut ext, start);
        ext.reverse();
        ext[pad..pad + x.len()].to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_of_sine_is_flat() {
        let fs = 16000.0;
        let x: Vec<f64> = (0..8192)
            .map(|n| 0.7 * (2.0 * PI * 1000.0 * n as f64 / fs).sin())
            .collect();
        let e = hilbert_envelope(&x);
        for v in &e[500..7500] {
            assert!((v - 0.7).abs() < 1e-3, "{v}");
        }
    }

    #[test]
    fn envelope_of_am_signal() {
        let fs = 16000.0;
        let x: Vec<f64> = (0..16000)
            .map(|n| {
                let t = n as f64 / fs;
                (1.0 + 0.5 * (2.0 * PI * 4.0 * t).cos()) * (2.0 * PI * 2000.0 * t).cos()
            })
            .collect();
        let e = hilbert_envelope(&x);
        for n in (1000..15000).step_by(97) {
            let t = n as f64 / fs;
            let expect = 1.0 + 0.5 * (2.0 * PI * 4.0 * t).cos();
            assert!((e[n] - expect).abs() < 0.02);
        }
    }

    #[test]
    fn lowpass_dc_and_stopband() {
        let bq = Biquad::butterworth_lowpass(100.0, 16000.0);
        assert!((bq.dc_gain() - 1.0).abs() < 1e-12);
        let y = bq.filtfilt(&vec![0.3; 1000], 50);
        assert!(y.iter().all(|v| (v - 0.3).abs() < 1e-9));
        let x: Vec<f64> = (0..16000)
            .map(|n| (2.0 * PI * 2000.0 * n as f64 / 16000.0).sin())
            .collect();
        let y = bq.filtfilt(&x, 1000);
        let peak = y[2000..14000].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        // two passes of a 2nd-order section, more than four octaves above cutoff
        assert!(peak < 1e-4, "{peak}");
    }

    #[test]
    fn degenerate_inputs() {
        assert!(hilbert_envelope(&[]).is_empty());
        let bq = Biquad::butterworth_lowpass(100.0, 16000.0);
        assert!(bq.filtfilt(&[], 10).is_empty());
        assert_eq!(bq.filtfilt(&[2.0], 10).len(), 1);
    }
}
