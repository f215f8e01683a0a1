#![allow(dead_code)]

use std::path::{Path, PathBuf};

use hearing_augment::synth;
use hearing_augment::{write_wav, WavFormat};

pub fn snr_db(reference: &[f32], test: &[f32]) -> f64 {
    let sig: f64 = reference.iter().map(|&v| (v as f64).powi(2)).sum();
    let err: f64 = reference
        .iter()
        .zip(test)
        .map(|(&a, &b)| (a as f64 - b as f64).powi(2))
        .sum();
    10.0 * (sig / err.max(1e-300)).log10()
}

pub fn relative_max_dev(reference: &[f64], test: &[f32]) -> f64 {
    let scale = reference
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1e-300);
    reference
        .iter()
        .zip(test)
        .map(|(&a, &b)| (a - b as f64).abs())
        .fold(0.0, f64::max)
        / scale
}

/// Level in dB re a full-scale sine, from RMS.
pub fn level_dbfs(x: &[f32]) -> f64 {
    let ms = x.iter().map(|&v| (v as f64).powi(2)).sum::<f64>() / x.len() as f64;
    10.0 * (2.0 * ms).log10()
}

pub fn energy(x: &[f32]) -> f64 {
    x.iter().map(|&v| (v as f64).powi(2)).sum()
}

/// Writes `n` short speech-like PCM16 files, some in a subdirectory.
pub fn write_corpus(dir: &Path, n: usize, seconds: f64) -> Vec<PathBuf> {
    (0..n)
        .map(|i| {
            let sub = if i % 3 == 0 {
                dir.join("spk_a")
            } else {
                dir.join("spk_b")
            };
            std::fs::create_dir_all(&sub).unwrap();
            let p = sub.join(format!("utt_{i:04}.wav"));
            let s = synth::speech_like(16000, seconds, -26.0, i as u64).unwrap();
            write_wav(&p, &s.buffer, WavFormat::Pcm16).unwrap();
            p
        })
        .collect()
}

/// Every file under `dir` as (relative path, bytes), sorted.
pub fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = walkdir(dir)
        .into_iter()
        .map(|p| {
            let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
            (rel, std::fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    out
}

fn walkdir(dir: &Path) -> Vec<PathBuf> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                files.push(p);
            }
        }
    }
    files
}

/// Mean and variance of U[X, hi) given the mean and variance of X.
pub fn chained_uniform(mean_x: f64, var_x: f64, hi: f64) -> (f64, f64) {
    let mean = (mean_x + hi) / 2.0;
    let second = (hi - mean_x).powi(2) + var_x;
    (mean, second / 12.0 + var_x / 4.0)
}

pub fn within_3_sigma(samples: &[f64], mean: f64, var: f64) -> bool {
    let m = samples.iter().sum::<f64>() / samples.len() as f64;
    (m - mean).abs() <= 3.0 * (var / samples.len() as f64).sqrt()
}
