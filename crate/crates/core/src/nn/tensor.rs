use alloc::vec;
use alloc::vec::Vec;

/// Dense `(batch, length, channels)` tensor, channels-last.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    batch: usize,
    len: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(batch: usize, len: usize, channels: usize) -> Self {
        Tensor3 { batch, len, channels, data: vec![0.0; batch * len * channels] }
    }

    /// Panics if the buffer size does not match the shape.
    pub fn from_vec(batch: usize, len: usize, channels: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), batch * len * channels, "tensor buffer size");
        Tensor3 { batch, len, channels, data }
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.batch, self.len, self.channels)
    }

    pub fn batch(&self) -> usize {
        self.batch
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Channel vector at `(b, t)`.
    #[inline]
    pub fn row(&self, b: usize, t: usize) -> &[f64] {
        let start = (b * self.len + t) * self.channels;
        &self.data[start..start + self.channels]
    }

    #[inline]
    pub fn row_mut(&mut self, b: usize, t: usize) -> &mut [f64] {
        let start = (b * self.len + t) * self.channels;
        &mut self.data[start..start + self.channels]
    }

    /// All values of sample `b`.
    pub fn sample(&self, b: usize) -> &[f64] {
        let n = self.len * self.channels;
        &self.data[b * n..(b + 1) * n]
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Stacks the selected samples of `self` into a new tensor.
    pub fn gather(&self, indices: &[usize]) -> Tensor3 {
        let n = self.len * self.channels;
        let mut data = Vec::with_capacity(indices.len() * n);
        for &i in indices {
            data.extend_from_slice(self.sample(i));
        }
        Tensor3 { batch: indices.len(), len: self.len, channels: self.channels, data }
    }
}
