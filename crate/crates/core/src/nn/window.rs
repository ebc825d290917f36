use super::tensor::Tensor3;
use super::NetError;
use crate::ingest::FeatureFrame;
use crate::math::{mean, sample_variance, sqrt};
use crate::time::Timestamp;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

/// Standardization constants `(x − mean) / std`, taken from training data only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub mean: f64,
    pub std: f64,
}

impl Normalization {
    pub const fn identity() -> Self {
        Normalization { mean: 0.0, std: 1.0 }
    }

    /// Mean and sample standard deviation of `values`.
    pub fn fit(values: &[f64]) -> Result<Self, NetError> {
        if values.len() < 2 {
            return Err(NetError::DegenerateNormalization);
        }
        let std = sqrt(sample_variance(values));
        if !(std > 0.0) || !std.is_finite() {
            return Err(NetError::DegenerateNormalization);
        }
        Ok(Normalization { mean: mean(values), std })
    }

    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        (x - self.mean) / self.std
    }

    #[inline]
    pub fn invert(&self, z: f64) -> f64 {
        z * self.std + self.mean
    }
}

/// Standardized consumption windows of shape `(N, length, 1)`, each tagged
/// with the timestamp of its last row.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSet {
    pub windows: Tensor3,
    pub timestamps: Vec<Timestamp>,
}

impl WindowSet {
    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn window_len(&self) -> usize {
        self.windows.len()
    }

    /// Windows `range` as a new set.
    pub fn slice(&self, range: core::ops::Range<usize>) -> WindowSet {
        let idx: Vec<usize> = range.clone().collect();
        WindowSet { windows: self.windows.gather(&idx), timestamps: self.timestamps[range].to_vec() }
    }
}

/// Slides a window of `length` rows with the given `stride` over the frame's
/// consumption column: `floor((len − length) / stride) + 1` windows.
pub fn make_windows(frame: &FeatureFrame, length: usize, stride: usize, norm: &Normalization) -> Result<WindowSet, NetError> {
    if length == 0 || stride == 0 {
        return Err(NetError::InvalidConfig("window length and stride must be positive"));
    }
    if !(norm.std > 0.0) {
        return Err(NetError::DegenerateNormalization);
    }
    let rows = frame.rows();
    if rows.len() < length {
        return Err(NetError::InsufficientWindows { needed: length, got: rows.len() });
    }
    let z: Vec<f64> = rows.iter().map(|r| norm.apply(r.consumption)).collect();
    let n = (rows.len() - length) / stride + 1;
    let mut data = Vec::with_capacity(n * length);
    let mut timestamps = Vec::with_capacity(n);
    for w in 0..n {
        let start = w * stride;
        data.extend_from_slice(&z[start..start + length]);
        timestamps.push(rows[start + length - 1].timestamp);
    }
    Ok(WindowSet { windows: Tensor3::from_vec(n, length, 1, data), timestamps })
}
