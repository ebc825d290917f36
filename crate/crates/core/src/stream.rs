//! Row-at-a-time detection with bounded state.
//!
//! The detector keeps the last `window_len` standardized consumption values
//! and the threshold buffer, nothing else. A timestamp jump larger than the
//! gap tolerance empties the consumption window; the threshold buffer is kept.

use crate::ingest::{FeatureFrame, FeatureRow};
use crate::nn::ConvAutoencoder;
use crate::scoring::{score_window, CsMode, GaussianModel, ScoreError};
use crate::threshold::{AnomalyRecord, ThresholdError, ThresholdState, DEFAULT_K, DEFAULT_WINDOW};
use crate::time::{Timestamp, HOUR};
use alloc::collections::VecDeque;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StreamConfig {
    pub w: usize,
    pub k: f64,
    pub mode: CsMode,
    /// Largest accepted spacing between consecutive rows, in seconds.
    pub gap_tolerance: i64,
    /// Replace a flagged newest value by its reconstruction before it
    /// enters later windows.
    pub mask_anomalies: bool,
}

impl Default for StreamConfig {
    fn default() -> Self {
        StreamConfig { w: DEFAULT_WINDOW, k: DEFAULT_K, mode: CsMode::Raw, gap_tolerance: HOUR, mask_anomalies: true }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StreamError<E = core::convert::Infallible> {
    #[error("rows out of order: {prev} then {got}")]
    Ordering { prev: Timestamp, got: Timestamp },
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Threshold(#[from] ThresholdError),
    #[error("source: {0}")]
    Source(E),
}

impl StreamError {
    /// Reinterprets a source-free error under any source error type.
    pub fn widen<E>(self) -> StreamError<E> {
        match self {
            StreamError::Ordering { prev, got } => StreamError::Ordering { prev, got },
            StreamError::Score(e) => StreamError::Score(e),
            StreamError::Threshold(e) => StreamError::Threshold(e),
            StreamError::Source(never) => match never {},
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StreamEvent {
    Record(AnomalyRecord),
    /// The window was emptied because of a gap of `gap` seconds before `timestamp`.
    Reset { timestamp: Timestamp, gap: i64 },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamSummary {
    pub rows: usize,
    pub records: usize,
    pub flagged: usize,
    pub resets: usize,
}

pub struct StreamDetector<'m> {
    model: &'m ConvAutoencoder,
    gaussian: &'m GaussianModel,
    config: StreamConfig,
    window: VecDeque<f64>,
    last: Option<Timestamp>,
    threshold: ThresholdState,
    summary: StreamSummary,
}

impl<'m> StreamDetector<'m> {
    pub fn new(model: &'m ConvAutoencoder, gaussian: &'m GaussianModel, config: StreamConfig) -> Result<Self, StreamError> {
        gaussian.check_context_features()?;
        let threshold = ThresholdState::new(config.w, config.k)?;
        Ok(StreamDetector {
            model,
            gaussian,
            config,
            window: VecDeque::with_capacity(model.window_len()),
            last: None,
            threshold,
            summary: StreamSummary::default(),
        })
    }

    pub fn summary(&self) -> StreamSummary {
        self.summary
    }

    /// Consumes one row. Emits a record once the window is full, or a reset
    /// when the row follows a gap.
    pub fn process<E>(&mut self, row: &FeatureRow) -> Result<Option<StreamEvent>, StreamError<E>> {
        let mut event = None;
        if let Some(prev) = self.last {
            if row.timestamp <= prev {
                return Err(StreamError::Ordering { prev, got: row.timestamp });
            }
            let gap = row.timestamp - prev;
            if gap > self.config.gap_tolerance {
                self.window.clear();
                self.summary.resets += 1;
                event = Some(StreamEvent::Reset { timestamp: row.timestamp, gap });
            }
        }
        self.last = Some(row.timestamp);
        self.summary.rows += 1;

        let len = self.model.window_len();
        if self.window.len() == len {
            self.window.pop_front();
        }
        self.window.push_back(self.model.normalization().apply(row.consumption));
        if self.window.len() < len {
            return Ok(event);
        }

        let current: Vec<f64> = self.window.iter().copied().collect();
        let (score, recon) = score_window(self.model, self.gaussian, row.timestamp, &current, &row.context(), self.config.mode)?;
        let (thr, anomaly) = self.threshold.push(score.cs)?;
        if anomaly && self.config.mask_anomalies {
            *self.window.back_mut().expect("full window") = recon[len - 1];
        }
        self.summary.records += 1;
        self.summary.flagged += anomaly as usize;
        Ok(Some(StreamEvent::Record(AnomalyRecord::from_score(&score, thr, anomaly))))
    }
}

/// Runs the detector over a fallible row source, handing each event to `sink`.
pub fn stream_detect<I, E, F>(
    model: &ConvAutoencoder,
    gaussian: &GaussianModel,
    source: I,
    config: StreamConfig,
    mut sink: F,
) -> Result<StreamSummary, StreamError<E>>
where
    I: IntoIterator<Item = Result<FeatureRow, E>>,
    F: FnMut(&StreamEvent),
{
    let mut det = StreamDetector::new(model, gaussian, config).map_err(StreamError::widen)?;
    for row in source {
        let row = row.map_err(StreamError::Source)?;
        if let Some(ev) = det.process(&row)? {
            sink(&ev);
        }
    }
    Ok(det.summary())
}

/// Batch detection over a whole frame; produces exactly the stream's records.
pub fn detect_frame(
    model: &ConvAutoencoder,
    gaussian: &GaussianModel,
    frame: &FeatureFrame,
    config: StreamConfig,
) -> Result<(Vec<AnomalyRecord>, StreamSummary), StreamError> {
    let mut records = Vec::with_capacity(frame.len());
    let summary = stream_detect(model, gaussian, frame.rows().iter().map(|r| Ok(*r)), config, |ev| {
        if let StreamEvent::Record(r) = ev {
            records.push(*r);
        }
    })?;
    Ok((records, summary))
}
