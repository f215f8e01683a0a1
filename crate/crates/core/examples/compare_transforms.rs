//! Dumps log-mel features of one utterance under no augmentation, SpecAugment masking,
//! spectral smearing and loudness recruitment, for side-by-side plotting.
//!
//! `cargo run --release --example compare_transforms -- [in.wav] [outdir]`

use std::path::PathBuf;

use hearing_augment::features::{dump_features, mel_features, spec_augment_mask};
use hearing_augment::{
    apply_loudness_recruitment, apply_spectral_smearing, derive_stream, read_wav, sample_audiogram,
    synth, Calibration, GammatoneFilterbank, Severity, SmearingParams, StftConfig,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let buf = match args.first() {
        Some(p) => read_wav(p)?,
        None => synth::speech_like(16000, 3.0, -20.0, 5)?.buffer,
    };
    let out = args
        .get(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("compare_transforms"));
    std::fs::create_dir_all(&out)?;

    let fb = GammatoneFilterbank::for_sample_rate(buf.sample_rate())?;
    let ag = sample_audiogram(Severity::Severe, &mut derive_stream(0, "compare")).audiogram;
    let smeared =
        apply_spectral_smearing(&buf, SmearingParams::new(2.0, 4.0)?, StftConfig::default())?;
    let recruited = apply_loudness_recruitment(&buf, &ag, &fb, Calibration::default())?;

    let clean = mel_features(&buf);
    let variants = [
        ("none", clean.clone()),
        (
            "specaugment",
            spec_augment_mask(&clean, &mut derive_stream(0, "compare#specaugment")),
        ),
        ("smearing", mel_features(&smeared)),
        ("recruitment", mel_features(&recruited)),
    ];
    for (name, feat) in &variants {
        dump_features(feat, &out.join(name), buf.sample_rate(), name)?;
        let mean = feat.data().iter().map(|&v| v as f64).sum::<f64>() / feat.data().len() as f64;
        println!(
            "{name:>12}: {} frames, mean log energy {mean:.2}",
            feat.frames()
        );
    }
    println!("features written under {}", out.display());
    Ok(())
}
