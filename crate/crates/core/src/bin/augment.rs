use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use hearing_augment::augment::{run, AugmentConfig, Method};
use hearing_augment::{Calibration, Severity};

/// Augment a WAV corpus with simulated hearing impairment.
#[derive(Parser, Debug)]
#[command(name = "augment", version)]
struct Args {
    #[arg(long)]
    input_dir: PathBuf,
    #[arg(long)]
    output_dir: PathBuf,
    /// ss (spectral smearing), lr (loudness recruitment) or both.
    #[arg(long, default_value = "lr", value_parser = str::parse::<Method>)]
    method: Method,
    /// mild, moderate or severe.
    #[arg(long, default_value = "moderate", value_parser = str::parse::<Severity>)]
    severity: Severity,
    /// Probability that an utterance is augmented.
    #[arg(long, default_value_t = 0.5)]
    prob: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Defaults to <output-dir>/manifest.jsonl.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Also write SpecAugment-masked log-mel features under <output-dir>/features.
    #[arg(long)]
    dump_features: bool,
    /// dB SPL of a full-scale sine.
    #[arg(long, default_value_t = 105.0)]
    full_scale_dbspl: f64,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    let calibration = match Calibration::new(args.full_scale_dbspl) {
        Ok(c) => c,
        Err(e) => {
            log::error!("{e}");
            return ExitCode::from(2);
        }
    };
    let config = AugmentConfig {
        input_dir: args.input_dir,
        output_dir: args.output_dir,
        method: args.method,
        severity: args.severity,
        prob: args.prob,
        master_seed: args.seed,
        jobs: args.jobs,
        dump_features: args.dump_features,
        calibration,
        manifest: args.manifest,
    };
    match run(&config) {
        Ok(summary) => {
            println!("{summary}");
            if summary.errors > 0 {
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(2)
        }
    }
}
