//! Prints per-utterance impairment draws for each severity.
//!
//! `cargo run --example sample_impairments -- [seed] [count]`

use hearing_augment::{derive_stream, sample_audiogram, sample_smearing_params, Severity};

fn main() {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map_or(0, |s| s.parse().expect("seed"));
    let count: usize = args.next().map_or(3, |s| s.parse().expect("count"));
    for sev in Severity::ALL {
        println!("{sev}:");
        for i in 0..count {
            let id = format!("utt{i:03}");
            let mut rng = derive_stream(seed, &id);
            let p = sample_smearing_params(sev, &mut rng);
            let d = sample_audiogram(sev, &mut rng);
            let hl: Vec<String> = d
                .audiogram
                .thresholds_db
                .iter()
                .map(|v| format!("{v:5.1}"))
                .collect();
            println!(
                "  {id}  r_l={:.3} r_u={:.3}  HL=[{}]{}",
                p.r_l,
                p.r_u,
                hl.join(" "),
                if d.degenerate { "  (degenerate)" } else { "" }
            );
        }
    }
}
