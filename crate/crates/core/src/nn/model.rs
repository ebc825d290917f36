use super::layer::{Activation, LayerKind, LayerSpec};
use super::tensor::Tensor3;
use super::window::Normalization;
use super::NetError;
use crate::math::sqrt;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const BN_EPS: f64 = 1e-3;
/// Fraction of the running statistic kept at each train-mode batch.
pub const BN_MOMENTUM: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

/// Gradient of the loss w.r.t. every trainable parameter, laid out like
/// [`ConvAutoencoder::params`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub values: Vec<f64>,
}

#[derive(Debug, Clone)]
enum LayerCache {
    Conv { input: Tensor3, pre: Option<Tensor3> },
    Norm { xhat: Tensor3, inv_std: Vec<f64> },
}

/// Sequential stack of 1D conv / transposed conv / batch-norm layers.
///
/// Trainable parameters live in one flat buffer, layer by layer (conv: weights
/// `[k][in][out]` then bias; batch norm: γ then β). Running batch-norm
/// statistics live in a second buffer (mean then variance per layer).
#[derive(Debug, Clone)]
pub struct ConvAutoencoder {
    layers: Vec<LayerSpec>,
    window_len: usize,
    params: Vec<f64>,
    buffers: Vec<f64>,
    param_offsets: Vec<usize>,
    buffer_offsets: Vec<usize>,
    normalization: Normalization,
    cache: Option<Vec<LayerCache>>,
}

/// The canonical ten-layer network on 24-step windows, initialized with seed 0.
pub fn canonical_architecture() -> ConvAutoencoder {
    ConvAutoencoder::canonical(24)
}

impl ConvAutoencoder {
    pub fn canonical_layers() -> Vec<LayerSpec> {
        use Activation::{None as Linear, Relu};
        vec![
            LayerSpec::conv(1, 16, 7, 2, Relu),
            LayerSpec::batch_norm(16),
            LayerSpec::conv(16, 8, 7, 2, Relu),
            LayerSpec::batch_norm(8),
            LayerSpec::conv(8, 4, 7, 2, Relu),
            LayerSpec::conv_transpose(4, 8, 2, 2, Relu),
            LayerSpec::batch_norm(8),
            LayerSpec::conv_transpose(8, 16, 7, 2, Relu),
            LayerSpec::batch_norm(16),
            LayerSpec::conv_transpose(16, 1, 7, 2, Linear),
        ]
    }

    /// Canonical layer stack on windows of `window_len` (a multiple of 8).
    pub fn canonical(window_len: usize) -> Self {
        let mut m = Self::from_layers(Self::canonical_layers(), window_len).expect("canonical stack is consistent");
        m.init_weights(0);
        m
    }

    /// Builds a stack with zero weights, identity batch norms (γ = 1, β = 0,
    /// running mean 0, running variance 1) and unit normalization.
    pub fn from_layers(layers: Vec<LayerSpec>, window_len: usize) -> Result<Self, NetError> {
        if layers.is_empty() || window_len == 0 {
            return Err(NetError::Architecture("empty stack or zero window".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.in_channels == 0 || l.out_channels == 0 || l.kernel_size == 0 || l.stride == 0 {
                return Err(NetError::Architecture(format!("layer {i} has a zero dimension")));
            }
            if l.kind == LayerKind::BatchNorm && l.in_channels != l.out_channels {
                return Err(NetError::Architecture(format!("layer {i}: batch norm must keep channels")));
            }
            if i > 0 && layers[i - 1].out_channels != l.in_channels {
                return Err(NetError::Architecture(format!("layer {i}: channel mismatch")));
            }
        }
        let mut param_offsets = vec![0];
        let mut buffer_offsets = vec![0];
        for l in &layers {
            param_offsets.push(param_offsets.last().unwrap() + l.trainable_count());
            buffer_offsets.push(buffer_offsets.last().unwrap() + l.buffer_count());
        }
        let mut m = ConvAutoencoder {
            params: vec![0.0; *param_offsets.last().unwrap()],
            buffers: vec![0.0; *buffer_offsets.last().unwrap()],
            layers,
            window_len,
            param_offsets,
            buffer_offsets,
            normalization: Normalization::identity(),
            cache: None,
        };
        m.reset_batch_norms();
        Ok(m)
    }

    fn reset_batch_norms(&mut self) {
        for i in 0..self.layers.len() {
            if self.layers[i].kind == LayerKind::BatchNorm {
                let c = self.layers[i].out_channels;
                let p = self.param_offsets[i];
                self.params[p..p + c].fill(1.0);
                self.params[p + c..p + 2 * c].fill(0.0);
                let b = self.buffer_offsets[i];
                self.buffers[b..b + c].fill(0.0);
                self.buffers[b + c..b + 2 * c].fill(1.0);
            }
        }
    }

    /// Fan-in scaled uniform init of conv weights, zero biases, identity batch
    /// norms. Limit is `√(3·gain²/fan_in)` with gain √2 before a ReLU.
    pub fn init_weights(&mut self, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.reset_batch_norms();
        for i in 0..self.layers.len() {
            let l = self.layers[i];
            if l.kind == LayerKind::BatchNorm {
                continue;
            }
            let taps = match l.kind {
                LayerKind::Conv1d => l.kernel_size,
                _ => l.kernel_size.div_ceil(l.stride),
            };
            let fan_in = (taps * l.in_channels) as f64;
            let gain2 = if l.activation == Activation::Relu { 2.0 } else { 1.0 };
            let limit = sqrt(3.0 * gain2 / fan_in);
            let p = self.param_offsets[i];
            let nw = l.weight_count();
            for w in &mut self.params[p..p + nw] {
                *w = (rng.random::<f64>() * 2.0 - 1.0) * limit;
            }
            self.params[p + nw..p + nw + l.out_channels].fill(0.0);
        }
        self.cache = None;
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn window_len(&self) -> usize {
        self.window_len
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn set_normalization(&mut self, n: Normalization) {
        self.normalization = n;
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn buffers(&self) -> &[f64] {
        &self.buffers
    }

    pub fn buffers_mut(&mut self) -> &mut [f64] {
        &mut self.buffers
    }

    pub fn layer_params(&self, i: usize) -> &[f64] {
        &self.params[self.param_offsets[i]..self.param_offsets[i + 1]]
    }

    pub fn layer_buffers(&self, i: usize) -> &[f64] {
        &self.buffers[self.buffer_offsets[i]..self.buffer_offsets[i + 1]]
    }

    /// Per-layer parameter counts, running statistics included.
    pub fn param_counts(&self) -> Vec<usize> {
        self.layers.iter().map(LayerSpec::param_count).collect()
    }

    pub fn total_params(&self) -> usize {
        self.param_counts().iter().sum()
    }

    /// `(length, channels)` of the input followed by each layer's output.
    pub fn output_shapes(&self) -> Vec<(usize, usize)> {
        let mut shapes = vec![(self.window_len, self.layers[0].in_channels)];
        let mut len = self.window_len;
        for l in &self.layers {
            len = l.output_len(len);
            shapes.push((len, l.out_channels));
        }
        shapes
    }

    pub fn in_channels(&self) -> usize {
        self.layers[0].in_channels
    }

    fn check_input(&self, x: &Tensor3) -> Result<(), NetError> {
        let expected = (x.batch(), self.window_len, self.in_channels());
        if x.batch() == 0 || x.shape() != expected {
            return Err(NetError::Shape { expected: (x.batch().max(1), expected.1, expected.2), got: x.shape() });
        }
        if !x.all_finite() {
            return Err(NetError::NonFinite);
        }
        Ok(())
    }

    pub fn forward(&mut self, x: &Tensor3, mode: Mode) -> Result<Tensor3, NetError> {
        match mode {
            Mode::Train => self.forward_train(x),
            Mode::Infer => self.infer(x),
        }
    }

    /// Inference: batch norms use running statistics. Pure and deterministic.
    pub fn infer(&self, x: &Tensor3) -> Result<Tensor3, NetError> {
        self.check_input(x)?;
        let mut cur = x.clone();
        for (i, l) in self.layers.iter().enumerate() {
            let p = self.layer_params(i);
            cur = match l.kind {
                LayerKind::Conv1d | LayerKind::Conv1dTranspose => {
                    let mut z = conv_forward(l, p, &cur);
                    if l.activation == Activation::Relu {
                        relu_in_place(&mut z);
                    }
                    z
                }
                LayerKind::BatchNorm => {
                    let c = l.out_channels;
                    let bufs = self.layer_buffers(i);
                    let (gamma, beta) = p.split_at(c);
                    let (rmean, rvar) = bufs.split_at(c);
                    let scale: Vec<f64> = (0..c).map(|ch| gamma[ch] / sqrt(rvar[ch] + BN_EPS)).collect();
                    for v in cur.as_mut_slice().chunks_exact_mut(c) {
                        for ch in 0..c {
                            v[ch] = (v[ch] - rmean[ch]) * scale[ch] + beta[ch];
                        }
                    }
                    cur
                }
            };
        }
        Ok(cur)
    }

    /// Train-mode forward: batch norms normalize with batch statistics and
    /// update their running estimates; activations are cached for
    /// [`backward`](Self::backward). Needs a batch of at least 2.
    pub fn forward_train(&mut self, x: &Tensor3) -> Result<Tensor3, NetError> {
        self.check_input(x)?;
        if x.batch() < 2 && self.layers.iter().any(|l| l.kind == LayerKind::BatchNorm) {
            return Err(NetError::InvalidConfig("train-mode batch norm needs batch ≥ 2"));
        }
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut cur = x.clone();
        for i in 0..self.layers.len() {
            let l = self.layers[i];
            match l.kind {
                LayerKind::Conv1d | LayerKind::Conv1dTranspose => {
                    let z = conv_forward(&l, self.layer_params(i), &cur);
                    let input = core::mem::replace(&mut cur, z);
                    let pre = if l.activation == Activation::Relu {
                        let pre = cur.clone();
                        relu_in_place(&mut cur);
                        Some(pre)
                    } else {
                        None
                    };
                    caches.push(LayerCache::Conv { input, pre });
                }
                LayerKind::BatchNorm => {
                    let c = l.out_channels;
                    let n = cur.batch() * cur.len();
                    let mut mean = vec![0.0; c];
                    for v in cur.as_slice().chunks_exact(c) {
                        for ch in 0..c {
                            mean[ch] += v[ch];
                        }
                    }
                    mean.iter_mut().for_each(|m| *m /= n as f64);
                    let mut var = vec![0.0; c];
                    for v in cur.as_slice().chunks_exact(c) {
                        for ch in 0..c {
                            let d = v[ch] - mean[ch];
                            var[ch] += d * d;
                        }
                    }
                    var.iter_mut().for_each(|s| *s /= n as f64);
                    let inv_std: Vec<f64> = var.iter().map(|s| 1.0 / sqrt(s + BN_EPS)).collect();

                    let mut xhat = cur.clone();
                    for v in xhat.as_mut_slice().chunks_exact_mut(c) {
                        for ch in 0..c {
                            v[ch] = (v[ch] - mean[ch]) * inv_std[ch];
                        }
                    }
                    let p = self.param_offsets[i];
                    for (v, h) in cur.as_mut_slice().chunks_exact_mut(c).zip(xhat.as_slice().chunks_exact(c)) {
                        for ch in 0..c {
                            v[ch] = self.params[p + ch] * h[ch] + self.params[p + c + ch];
                        }
                    }
                    let b = self.buffer_offsets[i];
                    let unbias = n as f64 / (n as f64 - 1.0);
                    for ch in 0..c {
                        let rm = &mut self.buffers[b + ch];
                        *rm = BN_MOMENTUM * *rm + (1.0 - BN_MOMENTUM) * mean[ch];
                        let rv = &mut self.buffers[b + c + ch];
                        *rv = BN_MOMENTUM * *rv + (1.0 - BN_MOMENTUM) * var[ch] * unbias;
                    }
                    caches.push(LayerCache::Norm { xhat, inv_std });
                }
            }
        }
        self.cache = Some(caches);
        Ok(cur)
    }

    /// Backpropagates `grad_output` (∂loss/∂output) through the cached
    /// train-mode pass. Returns parameter gradients and ∂loss/∂input; the
    /// cache is consumed.
    pub fn backward(&mut self, grad_output: &Tensor3) -> Result<(Gradients, Tensor3), NetError> {
        let caches = self.cache.take().ok_or(NetError::NoCache)?;
        let mut grads = vec![0.0; self.params.len()];
        let mut dy = grad_output.clone();
        for (i, cache) in caches.iter().enumerate().rev() {
            let l = self.layers[i];
            let p0 = self.param_offsets[i];
            let p1 = self.param_offsets[i + 1];
            match cache {
                LayerCache::Conv { input, pre } => {
                    if dy.shape() != (input.batch(), l.output_len(input.len()), l.out_channels) {
                        return Err(NetError::Shape {
                            expected: (input.batch(), l.output_len(input.len()), l.out_channels),
                            got: dy.shape(),
                        });
                    }
                    if let Some(pre) = pre {
                        for (g, z) in dy.as_mut_slice().iter_mut().zip(pre.as_slice()) {
                            if *z <= 0.0 {
                                *g = 0.0;
                            }
                        }
                    }
                    dy = conv_backward(&l, &self.params[p0..p1], input, &dy, &mut grads[p0..p1]);
                }
                LayerCache::Norm { xhat, inv_std } => {
                    let c = l.out_channels;
                    let n = (xhat.batch() * xhat.len()) as f64;
                    let (dgamma, dbeta) = grads[p0..p1].split_at_mut(c);
                    for (g, h) in dy.as_slice().chunks_exact(c).zip(xhat.as_slice().chunks_exact(c)) {
                        for ch in 0..c {
                            dgamma[ch] += g[ch] * h[ch];
                            dbeta[ch] += g[ch];
                        }
                    }
                    let gamma = &self.params[p0..p0 + c];
                    for (g, h) in dy.as_mut_slice().chunks_exact_mut(c).zip(xhat.as_slice().chunks_exact(c)) {
                        for ch in 0..c {
                            g[ch] = gamma[ch] * inv_std[ch] / n * (n * g[ch] - dbeta[ch] - h[ch] * dgamma[ch]);
                        }
                    }
                }
            }
        }
        Ok((Gradients { values: grads }, dy))
    }

    pub fn has_cache(&self) -> bool {
        self.cache.is_some()
    }

    pub fn clear_cache(&mut self) {
        self.cache = None;
    }

    /// Infer-mode reconstruction of a single window given in raw units.
    /// Returns the standardized input and its reconstruction.
    pub fn reconstruct_raw(&self, raw: &[f64]) -> Result<(Vec<f64>, Vec<f64>), NetError> {
        let z: Vec<f64> = raw.iter().map(|v| self.normalization.apply(*v)).collect();
        let x = Tensor3::from_vec(1, raw.len(), 1, z.clone());
        let y = self.infer(&x)?;
        Ok((z, y.into_vec()))
    }
}

fn relu_in_place(t: &mut Tensor3) {
    for v in t.as_mut_slice() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// Output position fed by input `i` through tap `j` of a transposed conv, or
/// input position read by output `o` through tap `j` of a conv.
#[inline]
fn tap_pos(base: usize, stride: usize, j: usize, pad: usize, limit: usize) -> Option<usize> {
    let pos = (base * stride + j).checked_sub(pad)?;
    (pos < limit).then_some(pos)
}

fn conv_forward(l: &LayerSpec, params: &[f64], x: &Tensor3) -> Tensor3 {
    let (k, s, pad, cin, cout) = (l.kernel_size, l.stride, l.pad_left(), l.in_channels, l.out_channels);
    let (w, bias) = params.split_at(l.weight_count());
    let (batch, len_in) = (x.batch(), x.len());
    let len_out = l.output_len(len_in);
    let mut out = Tensor3::zeros(batch, len_out, cout);
    for b in 0..batch {
        for o in 0..len_out {
            out.row_mut(b, o).copy_from_slice(bias);
        }
    }
    match l.kind {
        LayerKind::Conv1d => {
            for b in 0..batch {
                for o in 0..len_out {
                    for j in 0..k {
                        let Some(pos) = tap_pos(o, s, j, pad, len_in) else { continue };
                        let xrow = x.row(b, pos);
                        let orow = out.row_mut(b, o);
                        for (ci, &xv) in xrow.iter().enumerate() {
                            let wrow = &w[(j * cin + ci) * cout..(j * cin + ci + 1) * cout];
                            for (ov, wv) in orow.iter_mut().zip(wrow) {
                                *ov += xv * wv;
                            }
                        }
                    }
                }
            }
        }
        LayerKind::Conv1dTranspose => {
            for b in 0..batch {
                for i in 0..len_in {
                    for j in 0..k {
                        let Some(o) = tap_pos(i, s, j, pad, len_out) else { continue };
                        let xrow = x.row(b, i);
                        let orow = out.row_mut(b, o);
                        for (ci, &xv) in xrow.iter().enumerate() {
                            let wrow = &w[(j * cin + ci) * cout..(j * cin + ci + 1) * cout];
                            for (ov, wv) in orow.iter_mut().zip(wrow) {
                                *ov += xv * wv;
                            }
                        }
                    }
                }
            }
        }
        LayerKind::BatchNorm => unreachable!("batch norm is not a convolution"),
    }
    out
}

/// Given ∂loss/∂pre-activation `dz`, accumulates weight/bias gradients into
/// `grads` and returns ∂loss/∂input.
fn conv_backward(l: &LayerSpec, params: &[f64], x: &Tensor3, dz: &Tensor3, grads: &mut [f64]) -> Tensor3 {
    let (k, s, pad, cin, cout) = (l.kernel_size, l.stride, l.pad_left(), l.in_channels, l.out_channels);
    let nw = l.weight_count();
    let w = &params[..nw];
    let (dw, db) = grads.split_at_mut(nw);
    let (batch, len_in) = (x.batch(), x.len());
    let len_out = dz.len();
    let mut dx = Tensor3::zeros(batch, len_in, cin);
    for b in 0..batch {
        for o in 0..len_out {
            for (d, g) in db.iter_mut().zip(dz.row(b, o)) {
                *d += g;
            }
        }
    }
    // (input position, output position) pairs linked by tap j.
    let mut visit = |b: usize, i: usize, o: usize, j: usize, dx: &mut Tensor3| {
        let xrow = x.row(b, i);
        let grow = dz.row(b, o);
        let dxrow = dx.row_mut(b, i);
        for ci in 0..cin {
            let base = (j * cin + ci) * cout;
            let wrow = &w[base..base + cout];
            let dwrow = &mut dw[base..base + cout];
            let xv = xrow[ci];
            let mut acc = 0.0;
            for co in 0..cout {
                dwrow[co] += xv * grow[co];
                acc += wrow[co] * grow[co];
            }
            dxrow[ci] += acc;
        }
    };
    match l.kind {
        LayerKind::Conv1d => {
            for b in 0..batch {
                for o in 0..len_out {
                    for j in 0..k {
                        if let Some(i) = tap_pos(o, s, j, pad, len_in) {
                            visit(b, i, o, j, &mut dx);
                        }
                    }
                }
            }
        }
        LayerKind::Conv1dTranspose => {
            for b in 0..batch {
                for i in 0..len_in {
                    for j in 0..k {
                        if let Some(o) = tap_pos(i, s, j, pad, len_out) {
                            visit(b, i, o, j, &mut dx);
                        }
                    }
                }
            }
        }
        LayerKind::BatchNorm => unreachable!("batch norm is not a convolution"),
    }
    dx
}
