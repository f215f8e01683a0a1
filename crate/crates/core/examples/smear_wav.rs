//! Applies spectral smearing to a WAV file.
//!
//! `cargo run --example smear_wav -- in.wav out.wav [r_l r_u]`

use hearing_augment::{
    apply_spectral_smearing, read_wav_with_format, write_wav, SmearingParams, StftConfig,
};

fn main() -> hearing_augment::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.len() < 2 {
        eprintln!("usage: smear_wav IN OUT [R_L R_U]");
        std::process::exit(2);
    }
    let r_l = args.get(2).map_or(1.6, |s| s.parse().expect("r_l"));
    let r_u = args.get(3).map_or(2.4, |s| s.parse().expect("r_u"));
    let (x, fmt) = read_wav_with_format(&args[0])?;
    let y = apply_spectral_smearing(&x, SmearingParams::new(r_l, r_u)?, StftConfig::default())?;
    let clipped = write_wav(&args[1], &y, fmt)?;
    println!(
        "smeared {:.2} s with r_l={r_l} r_u={r_u} ({clipped} samples clipped)",
        x.duration_secs()
    );
    Ok(())
}
