//! Window scores: reconstruction error, Mahalanobis distance of the context
//! features, and their combined score.

use crate::ingest::{FeatureFrame, CONTEXT_FEATURES};
use crate::linalg::{cholesky, solve_lower_in_place, Matrix};
use crate::math::{mean, sample_variance, sqrt};
use crate::nn::{ConvAutoencoder, NetError, Tensor3, WindowSet};
use crate::time::Timestamp;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

const SCORE_CHUNK: usize = 512;
/// Ridge schedule, as multiples of the mean covariance diagonal.
const RIDGE_START: f64 = 1e-6;
const RIDGE_MAX: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScoreError {
    #[error("length mismatch: {0} vs {1}")]
    Shape(usize, usize),
    #[error("non-finite input")]
    NonFinite,
    #[error("negative score component")]
    Negative,
    #[error("covariance is singular even after ridge escalation")]
    SingularCovariance,
    #[error("need at least {needed} rows, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("window ending {0} has no matching frame row")]
    Alignment(Timestamp),
    #[error("feature mismatch: {0}")]
    FeatureMismatch(String),
    #[error(transparent)]
    Net(#[from] NetError),
}

/// Mean vector and ridge-regularized covariance of the context features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianModel {
    pub feature_names: Vec<String>,
    pub mu: Vec<f64>,
    pub sigma: Matrix,
    /// Lower Cholesky factor of `sigma + lambda·I`.
    pub chol: Matrix,
    pub lambda: f64,
}

impl GaussianModel {
    /// Factors `sigma + λI` with the smallest λ in the ridge schedule
    /// (1e-6 × mean diagonal, ×10 per failure, up to 1e-2 × mean diagonal).
    pub fn new(feature_names: Vec<String>, mu: Vec<f64>, sigma: Matrix) -> Result<Self, ScoreError> {
        let scale = mean(&sigma.diagonal());
        if !(scale > 0.0) {
            return Err(ScoreError::SingularCovariance);
        }
        let mut factor = RIDGE_START;
        while factor <= RIDGE_MAX * (1.0 + 1e-9) {
            if let Ok(m) = Self::with_lambda(feature_names.clone(), mu.clone(), sigma.clone(), factor * scale) {
                return Ok(m);
            }
            factor *= 10.0;
        }
        Err(ScoreError::SingularCovariance)
    }

    /// Factors `sigma + lambda·I` with exactly the given `lambda` (which may be 0).
    pub fn with_lambda(feature_names: Vec<String>, mu: Vec<f64>, sigma: Matrix, lambda: f64) -> Result<Self, ScoreError> {
        let d = mu.len();
        if sigma.rows() != d || sigma.cols() != d || feature_names.len() != d {
            return Err(ScoreError::Shape(d, sigma.rows()));
        }
        let mut reg = sigma.clone();
        for i in 0..d {
            reg[(i, i)] += lambda;
        }
        let chol = cholesky(&reg).ok_or(ScoreError::SingularCovariance)?;
        Ok(GaussianModel { feature_names, mu, sigma, chol, lambda })
    }

    /// Mean and sample covariance of `samples` (one row per observation).
    pub fn fit_samples(feature_names: &[&str], samples: &[Vec<f64>]) -> Result<Self, ScoreError> {
        let d = feature_names.len();
        let n = samples.len();
        if n < 8 {
            return Err(ScoreError::InsufficientData { needed: 8, got: n });
        }
        if samples.iter().any(|s| s.len() != d) {
            return Err(ScoreError::Shape(d, samples[0].len()));
        }
        if samples.iter().flatten().any(|v| !v.is_finite()) {
            return Err(ScoreError::NonFinite);
        }
        let mut mu = alloc::vec![0.0; d];
        for s in samples {
            for (m, v) in mu.iter_mut().zip(s) {
                *m += v;
            }
        }
        mu.iter_mut().for_each(|m| *m /= n as f64);
        let mut sigma = Matrix::zeros(d, d);
        for s in samples {
            for a in 0..d {
                let da = s[a] - mu[a];
                for b in 0..=a {
                    sigma[(a, b)] += da * (s[b] - mu[b]);
                }
            }
        }
        for a in 0..d {
            for b in 0..=a {
                let v = sigma[(a, b)] / (n - 1) as f64;
                sigma[(a, b)] = v;
                sigma[(b, a)] = v;
            }
        }
        Self::new(feature_names.iter().map(|s| s.to_string()).collect(), mu, sigma)
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    /// `√((x − μ)ᵀ (Σ + λI)⁻¹ (x − μ))` via a triangular solve.
    pub fn mahalanobis(&self, x: &[f64]) -> Result<f64, ScoreError> {
        if x.len() != self.dim() {
            return Err(ScoreError::Shape(x.len(), self.dim()));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(ScoreError::NonFinite);
        }
        let mut y: Vec<f64> = x.iter().zip(&self.mu).map(|(a, b)| a - b).collect();
        solve_lower_in_place(&self.chol, &mut y);
        Ok(sqrt(y.iter().map(|v| v * v).sum()))
    }

    /// Errors unless the feature names equal the frame's context features.
    pub fn check_context_features(&self) -> Result<(), ScoreError> {
        if self.feature_names.iter().map(String::as_str).eq(CONTEXT_FEATURES.iter().copied()) {
            Ok(())
        } else {
            Err(ScoreError::FeatureMismatch(alloc::format!("{:?}", self.feature_names)))
        }
    }
}

/// Gaussian over the context features of `frame.rows()[rows]`.
pub fn fit_gaussian(frame: &FeatureFrame, rows: core::ops::Range<usize>) -> Result<GaussianModel, ScoreError> {
    let samples: Vec<Vec<f64>> = frame.rows()[rows].iter().map(|r| r.context().to_vec()).collect();
    GaussianModel::fit_samples(&CONTEXT_FEATURES, &samples)
}

/// Free-function form of [`GaussianModel::mahalanobis`].
pub fn mahalanobis(x: &[f64], model: &GaussianModel) -> Result<f64, ScoreError> {
    model.mahalanobis(x)
}

/// Mean squared elementwise difference.
pub fn reconstruction_error(original: &[f64], reconstructed: &[f64]) -> Result<f64, ScoreError> {
    if original.len() != reconstructed.len() || original.is_empty() {
        return Err(ScoreError::Shape(original.len(), reconstructed.len()));
    }
    let sum: f64 = original.iter().zip(reconstructed).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(sum / original.len() as f64)
}

/// How reconstruction error and Mahalanobis distance are combined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum CsMode {
    /// `cs = mse + md`.
    Raw,
    /// `cs = mse / mse_scale + md / md_scale`, scales being the training-set
    /// standard deviations of each addend.
    Scaled { mse_scale: f64, md_scale: f64 },
}

impl CsMode {
    pub fn name(&self) -> &'static str {
        match self {
            CsMode::Raw => "raw",
            CsMode::Scaled { .. } => "scaled",
        }
    }

    /// Scaled mode calibrated on training-window scores.
    pub fn calibrate(records: &[ScoreRecord]) -> Result<CsMode, ScoreError> {
        let mse: Vec<f64> = records.iter().map(|r| r.mse).collect();
        let md: Vec<f64> = records.iter().map(|r| r.md).collect();
        let (a, b) = (sqrt(sample_variance(&mse)), sqrt(sample_variance(&md)));
        if !(a > 0.0 && b > 0.0) {
            return Err(ScoreError::InsufficientData { needed: 2, got: records.len() });
        }
        Ok(CsMode::Scaled { mse_scale: a, md_scale: b })
    }
}

/// Combined score of two non-negative addends.
pub fn combined_score(mse: f64, md: f64, mode: CsMode) -> Result<f64, ScoreError> {
    if !mse.is_finite() || !md.is_finite() {
        return Err(ScoreError::NonFinite);
    }
    if mse < 0.0 || md < 0.0 {
        return Err(ScoreError::Negative);
    }
    Ok(match mode {
        CsMode::Raw => mse + md,
        CsMode::Scaled { mse_scale, md_scale } => mse / mse_scale + md / md_scale,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub timestamp: Timestamp,
    pub mse: f64,
    pub md: f64,
    pub cs: f64,
}

/// Scores one standardized window given the context at its last row.
/// Returns the record and the reconstruction.
pub fn score_window(
    model: &ConvAutoencoder,
    gaussian: &GaussianModel,
    timestamp: Timestamp,
    window: &[f64],
    context: &[f64],
    mode: CsMode,
) -> Result<(ScoreRecord, Vec<f64>), ScoreError> {
    let x = Tensor3::from_vec(1, window.len(), 1, window.to_vec());
    let y = model.infer(&x)?;
    let mse = reconstruction_error(window, y.as_slice())?;
    let md = gaussian.mahalanobis(context)?;
    let cs = combined_score(mse, md, mode)?;
    Ok((ScoreRecord { timestamp, mse, md, cs }, y.into_vec()))
}

/// One record per window, context features taken at the window-end row.
pub fn score_series(
    model: &ConvAutoencoder,
    gaussian: &GaussianModel,
    frame: &FeatureFrame,
    windows: &WindowSet,
    mode: CsMode,
) -> Result<Vec<ScoreRecord>, ScoreError> {
    let n = windows.len();
    let mut out = Vec::with_capacity(n);
    let mut start = 0;
    while start < n {
        let end = (start + SCORE_CHUNK).min(n);
        let idx: Vec<usize> = (start..end).collect();
        let batch = windows.windows.gather(&idx);
        let recon = model.infer(&batch)?;
        for (slot, w) in (start..end).enumerate() {
            let ts = windows.timestamps[w];
            let row = frame.position(ts).ok_or(ScoreError::Alignment(ts))?;
            let mse = reconstruction_error(batch.sample(slot), recon.sample(slot))?;
            let md = gaussian.mahalanobis(&frame.rows()[row].context())?;
            out.push(ScoreRecord { timestamp: ts, mse, md, cs: combined_score(mse, md, mode)? });
        }
        start = end;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub left: f64,
    pub right: f64,
    pub count: usize,
}

/// Equal-width histogram over `[min, max]`; the last bin is closed.
pub fn histogram(values: &[f64], bins: usize) -> Vec<HistogramBin> {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() || bins == 0 {
        return Vec::new();
    }
    let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut out: Vec<HistogramBin> = (0..bins)
        .map(|i| HistogramBin { left: lo + i as f64 * width, right: lo + (i + 1) as f64 * width, count: 0 })
        .collect();
    for v in finite {
        let idx = (((v - lo) / width) as usize).min(bins - 1);
        out[idx].count += 1;
    }
    out
}
