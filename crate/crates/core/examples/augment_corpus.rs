//! Builds a small synthetic corpus and augments it end to end.
//!
//! `cargo run --release --example augment_corpus -- [workdir]`

use std::path::PathBuf;

use hearing_augment::augment::{run, AugmentConfig, Method};
use hearing_augment::{synth, write_wav, Severity, WavFormat};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let work = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("augment_corpus_example"));
    let input = work.join("clean");
    for i in 0..8u64 {
        let dir = input.join(format!("spk{}", i % 2));
        std::fs::create_dir_all(&dir)?;
        let s = synth::speech_like(16000, 2.0, -26.0, i)?;
        write_wav(dir.join(format!("utt{i}.wav")), &s.buffer, WavFormat::Pcm16)?;
    }
    let mut cfg = AugmentConfig::new(&input, work.join("augmented"));
    cfg.method = Method::Both;
    cfg.severity = Severity::Moderate;
    cfg.master_seed = 7;
    cfg.jobs = 4;
    cfg.dump_features = true;
    let summary = run(&cfg)?;
    println!("{summary}");
    println!("manifest: {}", cfg.manifest_path().display());
    Ok(())
}
