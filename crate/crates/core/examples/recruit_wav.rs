//! Simulates loudness recruitment for a given audiogram.
//!
//! `cargo run --example recruit_wav -- in.wav out.wav [audiogram.json]`
//!
//! The audiogram file holds `{"freqs": [...], "thresholds_db": [...]}`; without one a
//! moderate sloping loss is used.

use hearing_augment::{
    apply_loudness_recruitment, read_wav_with_format, write_wav, Audiogram, Calibration,
    GammatoneFilterbank,
};

fn main() -> hearing_augment::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.len() < 2 {
        eprintln!("usage: recruit_wav IN OUT [AUDIOGRAM_JSON]");
        std::process::exit(2);
    }
    let audiogram = match args.get(2) {
        Some(p) => Audiogram::from_json(&std::fs::read_to_string(p).expect("audiogram file"))?,
        None => Audiogram::new([15.0, 20.0, 25.0, 35.0, 45.0, 50.0])?,
    };
    let (x, fmt) = read_wav_with_format(&args[0])?;
    let fb = GammatoneFilterbank::for_sample_rate(x.sample_rate())?;
    let y = apply_loudness_recruitment(&x, &audiogram, &fb, Calibration::default())?;
    write_wav(&args[1], &y, fmt)?;
    println!("audiogram {}", audiogram.to_json());
    Ok(())
}
