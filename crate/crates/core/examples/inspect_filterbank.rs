//! Prints the gammatone channel layout and writes a smearing matrix as CSV.
//!
//! `cargo run --example inspect_filterbank -- [rate] [matrix.csv]`

use std::fs::File;
use std::io::BufWriter;

use hearing_augment::smearing::smearing_matrix_for;
use hearing_augment::{GammatoneFilterbank, SmearingParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let rate: u32 = args.first().map_or(16000, |s| s.parse().expect("rate"));
    let fb = GammatoneFilterbank::for_sample_rate(rate)?;
    println!(
        "{:>3} {:>9} {:>9} {:>6} {:>7}",
        "ch", "fc_hz", "erb_hz", "delay", "weight"
    );
    for (i, ch) in fb.channels().iter().enumerate() {
        println!(
            "{i:>3} {:>9.1} {:>9.1} {:>6} {:>7.3}",
            ch.center_hz, ch.bandwidth_hz, ch.peak_delay, ch.synthesis_weight
        );
    }
    if let Some(path) = args.get(1) {
        let m = smearing_matrix_for(SmearingParams::new(2.0, 4.0)?, 512, rate)?;
        let f = File::create(path)?;
        m.write_csv(BufWriter::new(f))?;
        println!(
            "wrote {}x{} severe smearing matrix to {path}",
            m.n_bins(),
            m.n_bins()
        );
    }
    Ok(())
}
