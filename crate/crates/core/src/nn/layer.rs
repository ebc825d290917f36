use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerKind {
    Conv1d,
    Conv1dTranspose,
    BatchNorm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    None,
}

/// Only "same" padding is supported: a convolution yields `ceil(len / stride)`
/// outputs with `floor((k - 1) / 2)` zeros on the left, and a transposed
/// convolution is its adjoint, yielding `len * stride` outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Padding {
    Same,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub kind: LayerKind,
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel_size: usize,
    pub stride: usize,
    pub padding: Padding,
    pub activation: Activation,
}

impl LayerSpec {
    pub const fn conv(in_channels: usize, out_channels: usize, kernel_size: usize, stride: usize, activation: Activation) -> Self {
        LayerSpec { kind: LayerKind::Conv1d, in_channels, out_channels, kernel_size, stride, padding: Padding::Same, activation }
    }

    pub const fn conv_transpose(
        in_channels: usize,
        out_channels: usize,
        kernel_size: usize,
        stride: usize,
        activation: Activation,
    ) -> Self {
        LayerSpec {
            kind: LayerKind::Conv1dTranspose,
            in_channels,
            out_channels,
            kernel_size,
            stride,
            padding: Padding::Same,
            activation,
        }
    }

    pub const fn batch_norm(channels: usize) -> Self {
        LayerSpec {
            kind: LayerKind::BatchNorm,
            in_channels: channels,
            out_channels: channels,
            kernel_size: 1,
            stride: 1,
            padding: Padding::Same,
            activation: Activation::None,
        }
    }

    pub fn weight_count(&self) -> usize {
        match self.kind {
            LayerKind::BatchNorm => 0,
            _ => self.kernel_size * self.in_channels * self.out_channels,
        }
    }

    /// Trainable values: conv weights + biases, or batch-norm γ + β.
    pub fn trainable_count(&self) -> usize {
        match self.kind {
            LayerKind::BatchNorm => 2 * self.out_channels,
            _ => self.weight_count() + self.out_channels,
        }
    }

    /// Non-trainable state: batch-norm running mean + running variance.
    pub fn buffer_count(&self) -> usize {
        match self.kind {
            LayerKind::BatchNorm => 2 * self.out_channels,
            _ => 0,
        }
    }

    /// Total parameter count, running statistics included.
    pub fn param_count(&self) -> usize {
        self.trainable_count() + self.buffer_count()
    }

    pub fn pad_left(&self) -> usize {
        (self.kernel_size - 1) / 2
    }

    pub fn output_len(&self, len: usize) -> usize {
        match self.kind {
            LayerKind::Conv1d => len.div_ceil(self.stride),
            LayerKind::Conv1dTranspose => len * self.stride,
            LayerKind::BatchNorm => len,
        }
    }
}
