//! Synthetic speech-like test signals.
//!
//! A source-filter toy: glottal pulse trains through three formant
//! resonators for vowels, shaped noise for fricatives, and pauses holding a
//! low noise floor. Good enough to exercise the transforms on harmonic,
//! formant-structured input with realistic level variation; not a vocoder.

use std::f64::consts::PI;
use std::ops::Range;

use crate::audio::AudioBuffer;
use crate::error::Result;
use crate::sampling::{derive_stream, RandomStream};

const VOWELS: [[f64; 3]; 5] = [
    [730.0, 1090.0, 2440.0],
    [270.0, 2290.0, 3010.0],
    [300.0, 870.0, 2240.0],
    [530.0, 1840.0, 2480.0],
    [570.0, 840.0, 2410.0],
];
const FORMANT_BW: [f64; 3] = [60.0, 90.0, 120.0];

/// Noise floor in pauses, in dB re full scale.
pub const PAUSE_FLOOR_DBFS: f64 = -70.0;

#[derive(Debug, Clone)]
pub struct SyntheticSpeech {
    pub buffer: AudioBuffer,
    /// Sample ranges of voiced (vowel) segments.
    pub voiced: Vec<Range<usize>>,
}

/// Klatt-style two-pole resonator with unit gain at DC.
struct Resonator {
    a1: f64,
    a2: f64,
    g: f64,
    y1: f64,
    y2: f64,
}

impl Resonator {
    fn new(freq: f64, bw: f64, fs: f64) -> Self {
        let r = (-PI * bw / fs).exp();
        let a1 = 2.0 * r * (2.0 * PI * freq / fs).cos();
        let a2 = -r * r;
        Self {
            a1,
            a2,
            g: 1.0 - a1 - a2,
            y1: 0.0,
            y2: 0.0,
        }
    }

    fn tick(&mut self, x: f64) -> f64 {
        let y = self.g * x + self.a1 * self.y1 + self.a2 * self.y2;
        self.y2 = self.y1;
        self.y1 = y;
        y
    }
}

fn noise(rng: &mut RandomStream) -> f64 {
    rng.uniform(-1.0, 1.0) * 3f64.sqrt()
}

fn ramp(n: usize, len: usize, fade: usize) -> f64 {
    let fade = fade.min(len / 2).max(1);
    let edge = n.min(len - 1 - n);
    if edge >= fade {
        1.0
    } else {
        0.5 - 0.5 * (PI * edge as f64 / fade as f64).cos()
    }
}

fn vowel(rng: &mut RandomStream, len: usize, fs: f64) -> Vec<f64> {
    let formants = VOWELS[rng.uniform_int(VOWELS.len() - 1)];
    let mut res: Vec<Resonator> = formants
        .iter()
        .zip(FORMANT_BW)
        .map(|(&f, bw)| Resonator::new(f, bw, fs))
        .collect();
    let f0_start = rng.uniform(95.0, 210.0);
    let f0_end = f0_start * rng.uniform(0.8, 1.2);
    let mut phase = 0.0;
    let mut tilt = 0.0;
    let mut lip = 0.0;
    let mut out = Vec::with_capacity(len);
    for n in 0..len {
        let f0 = f0_start + (f0_end - f0_start) * n as f64 / len as f64;
        phase += f0 / fs;
        let pulse = if phase >= 1.0 {
            phase -= 1.0;
            1.0
        } else {
            0.0
        };
        // -6 dB/octave source tilt
        tilt = 0.95 * tilt + pulse;
        let mut v = tilt + 0.01 * noise(rng);
        for r in res.iter_mut() {
            v = r.tick(v);
        }
        // lip radiation: first difference, removes the source's DC
        out.push(v - lip);
        lip = v;
    }
    out
}

fn fricative(rng: &mut RandomStream, len: usize, fs: f64) -> Vec<f64> {
    let mut res = Resonator::new(rng.uniform(3500.0, 5500.0), 1500.0, fs);
    let mut prev = 0.0;
    (0..len)
        .map(|_| {
            let w = noise(rng);
            let hp = w - prev;
            prev = w;
            res.tick(hp)
        })
        .collect()
}

fn rms(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

/// Generates `seconds` of speech-like audio. Vowel segments have an RMS of
/// roughly `level_dbfs` (±6 dB syllable to syllable).
pub fn speech_like(
    sample_rate: u32,
    seconds: f64,
    level_dbfs: f64,
    seed: u64,
) -> Result<SyntheticSpeech> {
    let fs = sample_rate as f64;
    let total = (seconds * fs).round() as usize;
    let mut rng = derive_stream(seed, "synthetic-speech");
    let floor = 10f64.powf(PAUSE_FLOOR_DBFS / 20.0);
    let target = 10f64.powf(level_dbfs / 20.0);
    let mut out = Vec::with_capacity(total);
    let mut voiced = Vec::new();
    let ms = |v: f64| (v * fs / 1000.0) as usize;
    while out.len() < total {
        let pause = ms(rng.uniform(60.0, 220.0));
        out.extend((0..pause).map(|_| floor * noise(&mut rng)));
        if rng.next_unit() < 0.4 {
            let len = ms(rng.uniform(60.0, 140.0));
            let mut f = fricative(&mut rng, len, fs);
            let g = 0.15 * target / rms(&f).max(1e-12);
            for (n, v) in f.iter_mut().enumerate() {
                *v = *v * g * ramp(n, len, ms(10.0)) + floor * noise(&mut rng);
            }
            out.extend(f);
        }
        let len = ms(rng.uniform(150.0, 340.0));
        let mut v = vowel(&mut rng, len, fs);
        let g = target * 10f64.powf(rng.uniform(-6.0, 6.0) / 20.0) / rms(&v).max(1e-12);
        for (n, s) in v.iter_mut().enumerate() {
            *s = *s * g * ramp(n, len, ms(25.0)) + floor * noise(&mut rng);
        }
        let start = out.len();
        out.extend(v);
        voiced.push(start..out.len());
    }
    out.truncate(total);
    voiced.retain_mut(|r| {
        r.end = r.end.min(total);
        r.start < r.end
    });
    Ok(SyntheticSpeech {
        buffer: AudioBuffer::from_f64(&out, sample_rate)?,
        voiced,
    })
}

/// A sine of peak amplitude `amp`.
pub fn sine(freq: f64, amp: f64, seconds: f64, sample_rate: u32) -> Result<AudioBuffer> {
    let fs = sample_rate as f64;
    let len = (seconds * fs).round() as usize;
    let x: Vec<f64> = (0..len)
        .map(|n| amp * (2.0 * PI * freq * n as f64 / fs).sin())
        .collect();
    AudioBuffer::from_f64(&x, sample_rate)
}

/// Uniform white noise with the given RMS.
pub fn white_noise(
    rms_level: f64,
    seconds: f64,
    sample_rate: u32,
    seed: u64,
) -> Result<AudioBuffer> {
    let len = (seconds * sample_rate as f64).round() as usize;
    let mut rng = derive_stream(seed, "white-noise");
    let x: Vec<f64> = (0..len).map(|_| rms_level * noise(&mut rng)).collect();
    AudioBuffer::from_f64(&x, sample_rate)
}
