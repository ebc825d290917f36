//! Dynamic threshold: mean plus `k` standard deviations of the last `w` scores.

use crate::math::sqrt;
use crate::scoring::ScoreRecord;
use crate::time::Timestamp;
use alloc::collections::VecDeque;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

pub const DEFAULT_WINDOW: usize = 168;
pub const DEFAULT_K: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ThresholdError {
    #[error("window must be positive and k finite and non-negative")]
    InvalidConfig,
    #[error("score must be finite and non-negative, got {0}")]
    InvalidScore(f64),
    #[error("moving statistics undefined before the first score")]
    WarmUp,
    #[error("timestamps not increasing: {prev} then {got}")]
    Ordering { prev: Timestamp, got: Timestamp },
}

/// Sliding buffer of the last `w` scores with running mean and population
/// variance. Updates are O(1); sums are recomputed exactly every `w` evictions
/// to keep drift bounded on long streams.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdState {
    w: usize,
    k: f64,
    buf: VecDeque<f64>,
    mean: f64,
    m2: f64,
    evictions: usize,
}

impl ThresholdState {
    pub fn new(w: usize, k: f64) -> Result<Self, ThresholdError> {
        if w == 0 || !k.is_finite() || k < 0.0 {
            return Err(ThresholdError::InvalidConfig);
        }
        Ok(ThresholdState { w, k, buf: VecDeque::with_capacity(w), mean: 0.0, m2: 0.0, evictions: 0 })
    }

    pub fn window(&self) -> usize {
        self.w
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn is_warm(&self) -> bool {
        self.buf.len() == self.w
    }

    /// Mean and population standard deviation of the buffered scores.
    pub fn moving_stats(&self) -> Result<(f64, f64), ThresholdError> {
        if self.buf.is_empty() {
            return Err(ThresholdError::WarmUp);
        }
        Ok((self.mean, sqrt(self.m2.max(0.0) / self.buf.len() as f64)))
    }

    /// Current threshold, `+∞` until `w` scores have been seen.
    pub fn threshold(&self) -> f64 {
        if !self.is_warm() {
            return f64::INFINITY;
        }
        let (m, s) = self.moving_stats().expect("warm buffer is non-empty");
        m + self.k * s
    }

    /// Compares `score` to the threshold of the preceding `w` scores, then
    /// admits it into the buffer. Returns `(threshold, is_anomaly)`.
    pub fn push(&mut self, score: f64) -> Result<(f64, bool), ThresholdError> {
        if !score.is_finite() || score < 0.0 {
            return Err(ThresholdError::InvalidScore(score));
        }
        let thr = self.threshold();
        let anomaly = score > thr;
        if self.buf.len() < self.w {
            self.buf.push_back(score);
            let n = self.buf.len() as f64;
            let d = score - self.mean;
            self.mean += d / n;
            self.m2 += d * (score - self.mean);
        } else {
            let old = self.buf.pop_front().expect("full buffer");
            self.buf.push_back(score);
            let n = self.w as f64;
            let d = score - old;
            let new_mean = self.mean + d / n;
            self.m2 += d * (score - new_mean + old - self.mean);
            self.mean = new_mean;
            self.evictions += 1;
            if self.evictions.is_multiple_of(self.w) {
                self.refresh();
            }
        }
        Ok((thr, anomaly))
    }

    fn refresh(&mut self) {
        // Incremental mean keeps a constant buffer's mean exactly constant.
        let mut m = 0.0;
        for (i, &x) in self.buf.iter().enumerate() {
            m += (x - m) / (i + 1) as f64;
        }
        self.mean = m;
        self.m2 = self.buf.iter().map(|x| (x - m) * (x - m)).sum();
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnomalyRecord {
    pub timestamp: Timestamp,
    pub cs: f64,
    pub threshold: f64,
    pub mse: f64,
    pub md: f64,
    pub is_anomaly: bool,
}

impl AnomalyRecord {
    pub fn from_score(score: &ScoreRecord, threshold: f64, is_anomaly: bool) -> Self {
        AnomalyRecord { timestamp: score.timestamp, cs: score.cs, threshold, mse: score.mse, md: score.md, is_anomaly }
    }
}

/// Applies the dynamic threshold to time-ordered scores.
pub fn detect(scores: &[ScoreRecord], w: usize, k: f64) -> Result<Vec<AnomalyRecord>, ThresholdError> {
    let mut state = ThresholdState::new(w, k)?;
    let mut out = Vec::with_capacity(scores.len());
    let mut prev: Option<Timestamp> = None;
    for s in scores {
        if let Some(p) = prev {
            if s.timestamp <= p {
                return Err(ThresholdError::Ordering { prev: p, got: s.timestamp });
            }
        }
        prev = Some(s.timestamp);
        let (thr, anomaly) = state.push(s.cs)?;
        out.push(AnomalyRecord::from_score(s, thr, anomaly));
    }
    Ok(out)
}
