//! Extracts 80-band log-mel features and applies SpecAugment-style masks.
//!
//! `cargo run --example features_specaugment -- [in.wav] [out_stem]`

use hearing_augment::features::{dump_features, mean_normalize, mel_features, MaskPlan};
use hearing_augment::{derive_stream, read_wav, synth};

fn main() -> hearing_augment::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let buf = match args.first() {
        Some(p) => read_wav(p)?,
        None => synth::speech_like(16000, 3.0, -20.0, 1)?.buffer,
    };
    let feat = mel_features(&buf);
    let mut rng = derive_stream(0, "example#specaugment");
    let plan = MaskPlan::draw(&mut rng, feat.frames(), feat.channels());
    let masked = plan.apply(&mean_normalize(&feat));
    println!("{} frames x {} bands", feat.frames(), feat.channels());
    println!("frequency masks (start, width): {:?}", plan.freq_masks);
    println!("time masks (start, width): {:?}", plan.time_masks);
    if let Some(stem) = args.get(1) {
        dump_features(
            &masked,
            std::path::Path::new(stem),
            buf.sample_rate(),
            "example",
        )?;
        println!("wrote {stem}.f32 and {stem}.json");
    }
    Ok(())
}
