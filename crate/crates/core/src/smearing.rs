//! Spectral smearing with rounded-exponential (roex) auditory filters.
//!
//! Each FFT bin gets one auditory filter. The normal-hearing matrix `A_N` and
//! a broadened matrix `A_W` are built from the same roex shape with different
//! broadening factors, and the power spectrum of every frame is multiplied by
//! `A_S = A_N^-1 A_W`. Phase is carried through unchanged.

use std::collections::{HashMap, VecDeque};
use std::io::Write;
use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use parking_lot::Mutex;
use serde::{Deserialize, Serialize};

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};
use crate::stft::{Spectrogram, StftConfig, StftPlan};

/// Rows centred below this frequency are left as identity rows. The relative
/// deviation `|f - fc| / fc` is unbounded as `fc` goes to zero.
pub const F_MIN_SMEAR: f64 = 50.0;

/// Relative ridge weight added to the diagonal of `A_N` before solving.
pub const RIDGE_SCALE: f64 = 1e-8;

/// ERB scale factor `0.00437 f + 1` shared by the roex and gammatone formulas.
#[inline]
pub(crate) fn erb_factor(fc: f64) -> f64 {
    0.00437 * fc + 1.0
}

/// Roex(p) intensity weight `(1 + p g) exp(-p g)` at normalised deviation `g`.
#[inline]
pub fn roex_weight(g: f64, p: f64) -> f64 {
    let pg = p * g;
    (1.0 + pg) * (-pg).exp()
}

/// Sharpness `p` of a roex filter centred at `fc` Hz, broadened by factor `r`.
pub fn filter_sharpness(fc: f64, r: f64) -> Result<f64> {
    if fc.is_nan() || fc <= 0.0 {
        return Err(Error::Domain(format!(
            "centre frequency must be positive, got {fc}"
        )));
    }
    if r.is_nan() || r <= 0.0 {
        return Err(Error::Domain(format!(
            "broadening factor must be positive, got {r}"
        )));
    }
    Ok(4.0 * fc / (24.7 * erb_factor(fc) * r))
}

/// Per-row divisor applied after evaluating the roex shape.
pub fn calibration_divisor(fc: f64, r_l: f64, r_u: f64) -> f64 {
    erb_factor(fc) * (r_l + r_u) / 2.0
}

/// Lower and upper auditory-filter broadening factors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmearingParams {
    pub r_l: f64,
    pub r_u: f64,
}

impl SmearingParams {
    /// Normal hearing: no broadening.
    pub const NORMAL: SmearingParams = SmearingParams { r_l: 1.0, r_u: 1.0 };

    pub fn new(r_l: f64, r_u: f64) -> Result<Self> {
        let p = Self { r_l, r_u };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_l.is_finite() && self.r_u.is_finite()) || self.r_l < 1.0 {
            return Err(Error::Param(format!("r_l must be >= 1, got {}", self.r_l)));
        }
        if self.r_u < self.r_l {
            return Err(Error::Param(format!(
                "r_u ({}) must not be below r_l ({})",
                self.r_u, self.r_l
            )));
        }
        Ok(())
    }
}

/// A square matrix of auditory filters, one row per frequency bin.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditoryMatrix {
    pub weights: DMatrix<f64>,
    pub bin_freqs: Vec<f64>,
}

impl AuditoryMatrix {
    /// Wraps an arbitrary square matrix, e.g. for hand-built test systems.
    pub fn from_weights(weights: DMatrix<f64>, bin_freqs: Vec<f64>) -> Result<Self> {
        if !weights.is_square() || weights.nrows() != bin_freqs.len() {
            return Err(Error::Dimension {
                expected: format!("{0}x{0}", bin_freqs.len()),
                got: format!("{}x{}", weights.nrows(), weights.ncols()),
            });
        }
        Ok(Self { weights, bin_freqs })
    }

    pub fn n_bins(&self) -> usize {
        self.bin_freqs.len()
    }
}

/// Builds the calibrated roex filter matrix for the given bin frequencies.
///
/// Row `i` holds the filter centred on `bin_freqs[i]`: bins below the centre
/// use the sharpness for `r_l`, bins above use `r_u`, and the row is divided by
/// [`calibration_divisor`].
pub fn build_auditory_matrix(bin_freqs: &[f64], r_l: f64, r_u: f64) -> Result<AuditoryMatrix> {
    SmearingParams::new(r_l, r_u)?;
    if bin_freqs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Param(
            "bin frequencies must be strictly ascending".into(),
        ));
    }
    let n = bin_freqs.len();
    let mut weights = DMatrix::zeros(n, n);
    for (i, &fc) in bin_freqs.iter().enumerate() {
        if fc < F_MIN_SMEAR {
            weights[(i, i)] = 1.0;
            continue;
        }
        let p_l = filter_sharpness(fc, r_l)?;
        let p_u = filter_sharpness(fc, r_u)?;
        let div = calibration_divisor(fc, r_l, r_u);
        for (j, &f) in bin_freqs.iter().enumerate() {
            let g = (f - fc).abs() / fc;
            let p = if f < fc { p_l } else { p_u };
            weights[(i, j)] = roex_weight(g, p) / div;
        }
    }
    Ok(AuditoryMatrix {
        weights,
        bin_freqs: bin_freqs.to_vec(),
    })
}

/// The matrix applied to power spectra, `A_S` with `A_N A_S = A_W`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmearingMatrix {
    weights: DMatrix<f64>,
}

impl SmearingMatrix {
    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn n_bins(&self) -> usize {
        self.weights.nrows()
    }

    /// Smears one power spectrum. Negative results are clamped to zero.
    pub fn apply(&self, power: &[f64]) -> Vec<f64> {
        let p = DVector::from_column_slice(power);
        let out = &self.weights * p;
        out.iter().map(|&v| v.max(0.0)).collect()
    }

    /// Dumps the matrix as comma-separated rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for row in self.weights.row_iter() {
            let line = row
                .iter()
                .map(|v| format!("{v:e}"))
                .collect::<Vec<_>>()
                .join(",");
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}

fn condition_estimate(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

/// Solves `(A_N + lambda I) X = A_W` with `lambda = 1e-8 * trace(A_N^T A_N) / n`.
pub fn solve_smearing(a_n: &DMatrix<f64>, a_w: &DMatrix<f64>) -> Result<SmearingMatrix> {
    if !a_n.is_square() || a_n.shape() != a_w.shape() {
        return Err(Error::Dimension {
            expected: format!("{0}x{0}", a_n.nrows()),
            got: format!("{}x{}", a_w.nrows(), a_w.ncols()),
        });
    }
    let n = a_n.nrows();
    if n == 0 {
        return Ok(SmearingMatrix {
            weights: DMatrix::zeros(0, 0),
        });
    }
    // trace(A^T A) is the squared Frobenius norm
    let lambda = RIDGE_SCALE * a_n.norm_squared() / n as f64;
    let shifted = a_n + DMatrix::identity(n, n) * lambda;
    let solved = shifted.clone().lu().solve(a_w);
    match solved {
        Some(x) if x.iter().all(|v| v.is_finite()) => Ok(SmearingMatrix { weights: x }),
        Some(_) => Err(Error::Solver {
            condition: condition_estimate(&shifted),
            reason: "solution contains non-finite entries".into(),
        }),
        None => Err(Error::Solver {
            condition: condition_estimate(&shifted),
            reason: "matrix is singular".into(),
        }),
    }
}

/// `A_S = A_N^-1 A_W` for two auditory matrices over the same bins.
/// `a_n` is expected to be the normal-hearing matrix (`r_l = r_u = 1`).
pub fn build_smearing_matrix(a_n: &AuditoryMatrix, a_w: &AuditoryMatrix) -> Result<SmearingMatrix> {
    if a_n.bin_freqs != a_w.bin_freqs {
        return Err(Error::Dimension {
            expected: format!("{} matching bin frequencies", a_n.n_bins()),
            got: format!("{} differing bin frequencies", a_w.n_bins()),
        });
    }
    solve_smearing(&a_n.weights, &a_w.weights)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct CacheKey {
    r_l: u64,
    r_u: u64,
    frame_len: usize,
    sample_rate: u32,
}

/// Bounded cache of smearing matrices keyed on parameters, frame size and rate.
/// Oldest entries are evicted first.
pub struct SmearingCache {
    capacity: usize,
    inner: Mutex<CacheInner>,
}

#[derive(Default)]
struct CacheInner {
    map: HashMap<CacheKey, Arc<SmearingMatrix>>,
    order: VecDeque<CacheKey>,
}

impl SmearingCache {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity: capacity.max(1),
            inner: Mutex::new(CacheInner::default()),
        }
    }

    /// Process-wide cache used by [`apply_spectral_smearing`].
    pub fn global() -> &'static SmearingCache {
        static CACHE: OnceLock<SmearingCache> = OnceLock::new();
        CACHE.get_or_init(|| SmearingCache::new(64))
    }

    pub fn len(&self) -> usize {
        self.inner.lock().map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get_or_build(
        &self,
        params: SmearingParams,
        frame_len: usize,
        sample_rate: u32,
    ) -> Result<Arc<SmearingMatrix>> {
        let key = CacheKey {
            r_l: params.r_l.to_bits(),
            r_u: params.r_u.to_bits(),
            frame_len,
            sample_rate,
        };
        if let Some(m) = self.inner.lock().map.get(&key) {
            return Ok(Arc::clone(m));
        }
        // built outside the lock; a racing duplicate build yields the same matrix
        let m = Arc::new(smearing_matrix_for(params, frame_len, sample_rate)?);
        let mut inner = self.inner.lock();
        if let Some(existing) = inner.map.get(&key) {
            return Ok(Arc::clone(existing));
        }
        while inner.map.len() >= self.capacity {
            match inner.order.pop_front() {
                Some(old) => {
                    inner.map.remove(&old);
                }
                None => break,
            }
        }
        inner.map.insert(key, Arc::clone(&m));
        inner.order.push_back(key);
        Ok(m)
    }
}

/// Builds `A_S` for an FFT of `frame_len` points at `sample_rate`.
pub fn smearing_matrix_for(
    params: SmearingParams,
    frame_len: usize,
    sample_rate: u32,
) -> Result<SmearingMatrix> {
    params.validate()?;
    let df = sample_rate as f64 / frame_len as f64;
    let freqs: Vec<f64> = (0..frame_len / 2 + 1).map(|k| k as f64 * df).collect();
    let a_n = build_auditory_matrix(&freqs, 1.0, 1.0)?;
    let a_w = build_auditory_matrix(&freqs, params.r_l, params.r_u)?;
    build_smearing_matrix(&a_n, &a_w)
}

/// Smears a spectrogram in place of its magnitudes, keeping each bin's phase.
pub fn smear_spectrogram(spec: &Spectrogram, matrix: &SmearingMatrix) -> Result<Spectrogram> {
    if spec.n_bins != matrix.n_bins() {
        return Err(Error::Dimension {
            expected: format!("{} bins", matrix.n_bins()),
            got: format!("{} bins", spec.n_bins),
        });
    }
    let frames = spec
        .frames
        .iter()
        .map(|frame| {
            let power: Vec<f64> = frame.iter().map(|c| c.norm_sqr()).collect();
            matrix
                .apply(&power)
                .into_iter()
                .zip(frame)
                .map(|(p, c)| Complex64::from_polar(p.sqrt(), c.arg()))
                .collect()
        })
        .collect();
    Ok(Spectrogram {
        frames,
        n_bins: spec.n_bins,
    })
}

/// Full smearing pipeline: STFT, power smearing, original phase, overlap-add.
/// The output has exactly the input length.
pub fn apply_spectral_smearing(
    buf: &AudioBuffer,
    params: SmearingParams,
    cfg: StftConfig,
) -> Result<AudioBuffer> {
    params.validate()?;
    let plan = StftPlan::new(cfg)?;
    if buf.is_empty() {
        return Ok(buf.clone());
    }
    let matrix = SmearingCache::global().get_or_build(params, cfg.frame_len, buf.sample_rate())?;
    let spec = plan.analyze(&buf.to_f64());
    let smeared = smear_spectrogram(&spec, &matrix)?;
    let y = plan.synthesize(&smeared, buf.len())?;
    AudioBuffer::from_f64(&y, buf.sample_rate())
}
