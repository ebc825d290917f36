//! Fitting a complete detector from a training frame.

use crate::ingest::FeatureFrame;
use crate::nn::{make_windows, train, ConvAutoencoder, NetError, Normalization, TrainConfig, TrainReport};
use crate::scoring::{fit_gaussian, score_series, CsMode, GaussianModel, ScoreError};
use serde::{Deserialize, Serialize};

pub const WINDOW_LEN: usize = 24;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Score(#[from] ScoreError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub window_len: usize,
    pub train: TrainConfig,
    /// Use the scale-normalized combined score instead of the raw sum.
    pub standardized_cs: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig { window_len: WINDOW_LEN, train: TrainConfig::default(), standardized_cs: false }
    }
}

#[derive(Debug, Clone)]
pub struct FittedDetector {
    pub model: ConvAutoencoder,
    pub gaussian: GaussianModel,
    pub mode: CsMode,
    /// Scale-normalized mode calibrated on the training windows, kept even
    /// when `mode` is raw so it can be switched on at detection time.
    pub scaled_mode: CsMode,
    pub report: TrainReport,
}

/// Standardizes consumption, trains the autoencoder on stride-1 windows
/// (weights initialized from `config.train.seed`), and fits the context
/// Gaussian on every row.
pub fn fit_detector(frame: &FeatureFrame, config: &FitConfig) -> Result<FittedDetector, PipelineError> {
    let norm = Normalization::fit(&frame.consumption())?;
    let windows = make_windows(frame, config.window_len, 1, &norm)?;
    let mut model = ConvAutoencoder::canonical(config.window_len);
    model.init_weights(config.train.seed);
    model.set_normalization(norm);
    let report = train(&mut model, &windows, &config.train)?;
    let gaussian = fit_gaussian(frame, 0..frame.len())?;
    let scores = score_series(&model, &gaussian, frame, &windows, CsMode::Raw)?;
    let scaled_mode = CsMode::calibrate(&scores)?;
    let mode = if config.standardized_cs { scaled_mode } else { CsMode::Raw };
    Ok(FittedDetector { model, gaussian, mode, scaled_mode, report })
}
