//! Batch corpus augmentation.
//!
//! Each input WAV becomes one work unit. Whether it is augmented, and with
//! which parameters, is drawn from a stream derived from
//! `(master_seed, utterance_id)`: the first draw decides augment-or-copy, the
//! following draws sample smearing parameters and/or an audiogram. Outputs,
//! feature dumps and the JSONL manifest are therefore byte-identical for any
//! worker count or input order.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use parking_lot::Mutex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audio::{read_wav_with_format, write_wav, AudioBuffer, Calibration};
use crate::error::{Error, Result};
use crate::features::{dump_features, mel_features, spec_augment_mask};
use crate::gammatone::GammatoneFilterbank;
use crate::recruitment::{apply_loudness_recruitment, Audiogram};
use crate::sampling::{derive_stream, sample_audiogram, sample_smearing_params, Severity};
use crate::smearing::{apply_spectral_smearing, SmearingParams};
use crate::stft::StftConfig;

/// Which transform(s) to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Spectral smearing.
    Ss,
    /// Loudness recruitment.
    Lr,
    /// Smearing followed by recruitment.
    Both,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Ss => "ss",
            Method::Lr => "lr",
            Method::Both => "both",
        }
    }

    fn smears(self) -> bool {
        matches!(self, Method::Ss | Method::Both)
    }

    fn recruits(self) -> bool {
        matches!(self, Method::Lr | Method::Both)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ss" => Ok(Method::Ss),
            "lr" => Ok(Method::Lr),
            "both" => Ok(Method::Both),
            other => Err(Error::Param(format!(
                "unknown method '{other}' (expected ss, lr or both)"
            ))),
        }
    }
}

/// Sampled parameters for one utterance; enough to re-run it standalone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpairmentParams {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub smearing: Option<SmearingParams>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub audiogram: Option<Audiogram>,
}

/// Outcome of the per-utterance draw.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub augment: bool,
    pub params: Option<ImpairmentParams>,
    pub degenerate_draw: bool,
}

/// In-process augmentation: parameter draws plus transforms, with cached
/// filterbanks. Shareable across threads.
pub struct Augmenter {
    pub method: Method,
    pub severity: Severity,
    pub prob: f64,
    pub master_seed: u64,
    pub calibration: Calibration,
    pub stft: StftConfig,
    filterbanks: Mutex<HashMap<u32, Arc<GammatoneFilterbank>>>,
}

impl Augmenter {
    pub fn new(
        method: Method,
        severity: Severity,
        prob: f64,
        master_seed: u64,
        calibration: Calibration,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&prob) {
            return Err(Error::Param(format!("prob must lie in [0, 1], got {prob}")));
        }
        Ok(Self {
            method,
            severity,
            prob,
            master_seed,
            calibration,
            stft: StftConfig::default(),
            filterbanks: Mutex::new(HashMap::new()),
        })
    }

    pub fn filterbank(&self, sample_rate: u32) -> Result<Arc<GammatoneFilterbank>> {
        if let Some(fb) = self.filterbanks.lock().get(&sample_rate) {
            return Ok(Arc::clone(fb));
        }
        let fb = Arc::new(GammatoneFilterbank::for_sample_rate(sample_rate)?);
        Ok(Arc::clone(
            self.filterbanks.lock().entry(sample_rate).or_insert(fb),
        ))
    }

    /// Draws the augment-or-copy decision and parameters for `utterance_id`.
    pub fn decide(&self, utterance_id: &str) -> Decision {
        let mut rng = derive_stream(self.master_seed, utterance_id);
        if rng.next_unit() >= self.prob {
            return Decision {
                augment: false,
                params: None,
                degenerate_draw: false,
            };
        }
        let smearing = self
            .method
            .smears()
            .then(|| sample_smearing_params(self.severity, &mut rng));
        let (audiogram, degenerate_draw) = if self.method.recruits() {
            let d = sample_audiogram(self.severity, &mut rng);
            (Some(d.audiogram), d.degenerate)
        } else {
            (None, false)
        };
        Decision {
            augment: true,
            params: Some(ImpairmentParams {
                smearing,
                audiogram,
            }),
            degenerate_draw,
        }
    }

    /// Applies explicit parameters: smearing first, then recruitment.
    pub fn apply_params(
        &self,
        buf: &AudioBuffer,
        params: &ImpairmentParams,
    ) -> Result<AudioBuffer> {
        let mut out = buf.clone();
        if let Some(sp) = params.smearing {
            out = apply_spectral_smearing(&out, sp, self.stft)?;
        }
        if let Some(ag) = &params.audiogram {
            let fb = self.filterbank(out.sample_rate())?;
            out = apply_loudness_recruitment(&out, ag, &fb, self.calibration)?;
        }
        Ok(out)
    }

    /// Decides and, if selected, transforms one utterance.
    pub fn augment(
        &self,
        buf: &AudioBuffer,
        utterance_id: &str,
    ) -> Result<(AudioBuffer, Decision)> {
        let decision = self.decide(utterance_id);
        let out = match &decision.params {
            Some(p) => self.apply_params(buf, p)?,
            None => buf.clone(),
        };
        Ok((out, decision))
    }
}

/// Batch run configuration.
#[derive(Debug, Clone)]
pub struct AugmentConfig {
    pub input_dir: PathBuf,
    pub output_dir: PathBuf,
    pub method: Method,
    pub severity: Severity,
    pub prob: f64,
    pub master_seed: u64,
    pub jobs: usize,
    pub dump_features: bool,
    pub calibration: Calibration,
    /// Defaults to `<output_dir>/manifest.jsonl`.
    pub manifest: Option<PathBuf>,
}

impl AugmentConfig {
    pub fn new(input_dir: impl Into<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            input_dir: input_dir.into(),
            output_dir: output_dir.into(),
            method: Method::Lr,
            severity: Severity::Moderate,
            prob: 0.5,
            master_seed: 0,
            jobs: 1,
            dump_features: false,
            calibration: Calibration::default(),
            manifest: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.prob) {
            return Err(Error::Param(format!(
                "prob must lie in [0, 1], got {}",
                self.prob
            )));
        }
        if self.jobs == 0 {
            return Err(Error::Param("jobs must be at least 1".into()));
        }
        Ok(())
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.manifest
            .clone()
            .unwrap_or_else(|| self.output_dir.join("manifest.jsonl"))
    }
}

/// One manifest line. Paths are relative to the input and output directories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub utterance_id: String,
    pub input_path: String,
    pub output_path: String,
    pub augmented: bool,
    pub method: Method,
    pub severity: Severity,
    #[serde(default)]
    pub params: Option<ImpairmentParams>,
    pub degenerate_draw: bool,
    pub clip_count: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RunSummary {
    pub total: usize,
    pub augmented: usize,
    pub copied: usize,
    pub errors: usize,
    pub degenerate_draws: usize,
    pub clipped_samples: usize,
}

impl fmt::Display for RunSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} files: {} augmented, {} copied, {} errors ({} degenerate draws, {} clipped samples)",
            self.total, self.augmented, self.copied, self.errors, self.degenerate_draws, self.clipped_samples
        )
    }
}

/// `dir/a/b.wav` relative to `dir` becomes `a/b`.
pub fn utterance_id(root: &Path, file: &Path) -> String {
    let rel = file.strip_prefix(root).unwrap_or(file);
    let mut parts: Vec<String> = rel
        .components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect();
    if let Some(last) = parts.last_mut() {
        if let Some(stem) = Path::new(last.as_str()).file_stem() {
            *last = stem.to_string_lossy().into_owned();
        }
    }
    parts.join("/")
}

fn relative(root: &Path, file: &Path) -> String {
    let rel = file.strip_prefix(root).unwrap_or(file);
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join("/")
}

/// All `.wav` files under `dir`, sorted by path.
pub fn discover_wavs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in walkdir::WalkDir::new(dir).follow_links(true) {
        let entry = entry.map_err(|e| {
            let path = e.path().unwrap_or(dir).to_path_buf();
            Error::io(path, e.into())
        })?;
        let is_wav = entry
            .path()
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("wav"));
        if entry.file_type().is_file() && is_wav {
            files.push(entry.into_path());
        }
    }
    files.sort();
    Ok(files)
}

/// Discovers the corpus under `input_dir` and processes it.
pub fn run(config: &AugmentConfig) -> Result<RunSummary> {
    let files = discover_wavs(&config.input_dir)?;
    run_files(config, files)
}

/// Processes an explicit list of files under `config.input_dir`, in any order.
pub fn run_files(config: &AugmentConfig, files: Vec<PathBuf>) -> Result<RunSummary> {
    config.validate()?;
    if files.is_empty() {
        return Err(Error::Param(format!(
            "no WAV files found in {}",
            config.input_dir.display()
        )));
    }
    fs::create_dir_all(&config.output_dir).map_err(|e| Error::io(&config.output_dir, e))?;
    let augmenter = Augmenter::new(
        config.method,
        config.severity,
        config.prob,
        config.master_seed,
        config.calibration,
    )?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| Error::Param(format!("cannot start {} workers: {e}", config.jobs)))?;
    let mut entries: Vec<ManifestEntry> = pool.install(|| {
        files
            .par_iter()
            .map(|f| process_file(config, &augmenter, f))
            .collect()
    });
    entries.sort_by(|a, b| a.utterance_id.cmp(&b.utterance_id));

    let manifest = config.manifest_path();
    if let Some(parent) = manifest.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut text = Vec::new();
    for e in &entries {
        serde_json::to_writer(&mut text, e)?;
        text.push(b'\n');
    }
    fs::File::create(&manifest)
        .and_then(|mut f| f.write_all(&text))
        .map_err(|e| Error::io(&manifest, e))?;

    let mut summary = RunSummary {
        total: entries.len(),
        ..Default::default()
    };
    for e in &entries {
        if e.error.is_some() {
            summary.errors += 1;
        } else if e.augmented {
            summary.augmented += 1;
        } else {
            summary.copied += 1;
        }
        summary.degenerate_draws += e.degenerate_draw as usize;
        summary.clipped_samples += e.clip_count;
    }
    Ok(summary)
}

fn process_file(config: &AugmentConfig, augmenter: &Augmenter, file: &Path) -> ManifestEntry {
    let id = utterance_id(&config.input_dir, file);
    let rel = relative(&config.input_dir, file);
    let mut entry = ManifestEntry {
        utterance_id: id.clone(),
        input_path: rel.clone(),
        output_path: rel.clone(),
        augmented: false,
        method: config.method,
        severity: config.severity,
        params: None,
        degenerate_draw: false,
        clip_count: 0,
        error: None,
    };
    if let Err(e) = process_into(config, augmenter, file, &id, &rel, &mut entry) {
        log::warn!("{}: {e}", file.display());
        entry.augmented = false;
        entry.params = None;
        entry.degenerate_draw = false;
        entry.error = Some(e.to_string());
    }
    entry
}

fn process_into(
    config: &AugmentConfig,
    augmenter: &Augmenter,
    file: &Path,
    id: &str,
    rel: &str,
    entry: &mut ManifestEntry,
) -> Result<()> {
    let (buf, format) = read_wav_with_format(file)?;
    let out_path = config.output_dir.join(rel);
    if let Some(parent) = out_path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let decision = augmenter.decide(id);
    let output = match &decision.params {
        Some(params) => {
            let y = augmenter.apply_params(&buf, params)?;
            entry.clip_count = write_wav(&out_path, &y, format)?;
            y
        }
        None => {
            fs::copy(file, &out_path).map_err(|e| Error::io(&out_path, e))?;
            buf
        }
    };
    entry.augmented = decision.augment;
    entry.params = decision.params;
    entry.degenerate_draw = decision.degenerate_draw;

    if config.dump_features {
        let stem = config.output_dir.join("features").join(rel);
        if let Some(parent) = stem.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        let mut rng = derive_stream(config.master_seed, &format!("{id}#specaugment"));
        let feat = spec_augment_mask(&mel_features(&output), &mut rng);
        dump_features(&feat, &stem, output.sample_rate(), id)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_from_paths() {
        let root = Path::new("/data/in");
        assert_eq!(
            utterance_id(root, Path::new("/data/in/spk1/utt 2.wav")),
            "spk1/utt 2"
        );
        assert_eq!(utterance_id(root, Path::new("/data/in/a.WAV")), "a");
        assert_eq!(
            relative(root, Path::new("/data/in/spk1/x.wav")),
            "spk1/x.wav"
        );
    }

    #[test]
    fn method_parsing() {
        assert_eq!("SS".parse::<Method>().unwrap(), Method::Ss);
        assert_eq!("both".parse::<Method>().unwrap(), Method::Both);
        assert!("xx".parse::<Method>().is_err());
    }

    #[test]
    fn decision_respects_method_and_prob() {
        let cal = Calibration::default();
        let never = Augmenter::new(Method::Both, Severity::Mild, 0.0, 1, cal).unwrap();
        let always = Augmenter::new(Method::Both, Severity::Mild, 1.0, 1, cal).unwrap();
        let ss = Augmenter::new(Method::Ss, Severity::Mild, 1.0, 1, cal).unwrap();
        for i in 0..200 {
            let id = format!("u{i}");
            assert!(!never.decide(&id).augment);
            let d = always.decide(&id);
            let p = d.params.unwrap();
            assert!(p.smearing.is_some() && p.audiogram.is_some());
            let p = ss.decide(&id).params.unwrap();
            assert!(p.smearing.is_some() && p.audiogram.is_none());
        }
        assert!(Augmenter::new(Method::Ss, Severity::Mild, 1.5, 1, cal).is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = AugmentConfig::new("a", "b");
        c.jobs = 0;
        assert!(c.validate().is_err());
        c.jobs = 2;
        c.prob = -0.1;
        assert!(c.validate().is_err());
        c.prob = 1.0;
        assert!(c.validate().is_ok());
        assert_eq!(c.manifest_path(), Path::new("b/manifest.jsonl"));
    }

    #[test]
    fn manifest_entry_json_shape() {
        let e = ManifestEntry {
            utterance_id: "x".into(),
            input_path: "x.wav".into(),
            output_path: "x.wav".into(),
            augmented: true,
            method: Method::Lr,
            severity: Severity::Mild,
            params: Some(ImpairmentParams {
                smearing: None,
                audiogram: Some(Audiogram::normal()),
            }),
            degenerate_draw: false,
            clip_count: 0,
            error: None,
        };
        let v: serde_json::Value = serde_json::to_value(&e).unwrap();
        assert_eq!(v["method"], "lr");
        assert_eq!(v["severity"], "mild");
        assert_eq!(v["params"]["audiogram"]["freqs"][0], 250.0);
        assert!(v.get("error").is_none());
        let back: ManifestEntry = serde_json::from_value(v).unwrap();
        assert_eq!(back, e);
    }
}
