use super::model::{ConvAutoencoder, Mode};
use super::optim::Adam;
use super::tensor::Tensor3;
use super::window::WindowSet;
use super::NetError;
use alloc::vec::Vec;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

const EVAL_CHUNK: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Trailing fraction of windows (by time) held out for validation.
    pub validation_fraction: f64,
    pub seed: u64,
    /// Stop after this many epochs without a validation improvement and
    /// restore the best weights. `None` disables early stopping.
    pub patience: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { epochs: 50, batch_size: 64, learning_rate: 1e-3, validation_fraction: 0.1, seed: 42, patience: Some(10) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochLoss>,
    pub epochs_run: usize,
    /// 1-based epoch whose weights the model holds after training.
    pub best_epoch: usize,
    /// Infer-mode losses of the model as handed to [`train`].
    pub initial_train_loss: f64,
    pub initial_val_loss: Option<f64>,
}

impl TrainReport {
    pub fn final_train_loss(&self) -> f64 {
        self.epochs.last().map_or(self.initial_train_loss, |e| e.train_loss)
    }

    pub fn final_val_loss(&self) -> Option<f64> {
        self.epochs.last().and_then(|e| e.val_loss)
    }
}

/// Mean squared error over all elements and its gradient w.r.t. `pred`.
pub fn mse_loss(pred: &Tensor3, target: &Tensor3) -> (f64, Tensor3) {
    assert_eq!(pred.shape(), target.shape(), "loss shape");
    let (b, l, c) = pred.shape();
    let n = (b * l * c) as f64;
    let mut grad = Vec::with_capacity(pred.as_slice().len());
    let mut loss = 0.0;
    for (p, t) in pred.as_slice().iter().zip(target.as_slice()) {
        let d = p - t;
        loss += d * d;
        grad.push(2.0 * d / n);
    }
    (loss / n, Tensor3::from_vec(b, l, c, grad))
}

/// Infer-mode reconstruction MSE averaged over windows.
pub(crate) fn evaluate(model: &ConvAutoencoder, windows: &Tensor3) -> Result<f64, NetError> {
    let n = windows.batch();
    let mut total = 0.0;
    let mut start = 0;
    while start < n {
        let end = (start + EVAL_CHUNK).min(n);
        let idx: Vec<usize> = (start..end).collect();
        let batch = windows.gather(&idx);
        let out = model.infer(&batch)?;
        let (loss, _) = mse_loss(&out, &batch);
        total += loss * (end - start) as f64;
        start = end;
    }
    Ok(total / n as f64)
}

/// Minibatch Adam on the reconstruction loss.
///
/// The last `validation_fraction` of windows (in time order) is held out;
/// training windows are reshuffled every epoch from a generator seeded with
/// `config.seed`, so identical inputs and seed give bit-identical weights.
/// Batches smaller than 2 are skipped (batch norm needs batch statistics).
pub fn train(model: &mut ConvAutoencoder, windows: &WindowSet, config: &TrainConfig) -> Result<TrainReport, NetError> {
    if config.batch_size < 2 {
        return Err(NetError::InvalidConfig("batch size must be ≥ 2"));
    }
    if !(0.0..0.5).contains(&config.validation_fraction) {
        return Err(NetError::InvalidConfig("validation fraction must be in [0, 0.5)"));
    }
    if !(config.learning_rate > 0.0) {
        return Err(NetError::InvalidConfig("learning rate must be positive"));
    }
    let n = windows.len();
    if n < 2 * config.batch_size {
        return Err(NetError::InsufficientWindows { needed: 2 * config.batch_size, got: n });
    }
    let n_val = crate::math::round(n as f64 * config.validation_fraction) as usize;
    let n_train = n - n_val;
    let all: Vec<usize> = (0..n).collect();
    let train_set = windows.windows.gather(&all[..n_train]);
    let val_set = (n_val > 0).then(|| windows.windows.gather(&all[n_train..]));

    let initial_train_loss = evaluate(model, &train_set)?;
    let initial_val_loss = val_set.as_ref().map(|v| evaluate(model, v)).transpose()?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut adam = Adam::new(model.params().len(), config.learning_rate);
    let mut order: Vec<usize> = (0..n_train).collect();
    let mut report = TrainReport {
        epochs: Vec::with_capacity(config.epochs),
        epochs_run: 0,
        best_epoch: 0,
        initial_train_loss,
        initial_val_loss,
    };
    let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;
    let mut since_best = 0;

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut sum = 0.0;
        let mut seen = 0usize;
        for chunk in order.chunks(config.batch_size) {
            if chunk.len() < 2 {
                continue;
            }
            let batch = train_set.gather(chunk);
            let out = model.forward(&batch, Mode::Train)?;
            let (loss, grad) = mse_loss(&out, &batch);
            if !loss.is_finite() {
                model.clear_cache();
                return Err(NetError::Diverged { epoch });
            }
            let (grads, _) = model.backward(&grad)?;
            adam.step(model.params_mut(), &grads.values);
            sum += loss * chunk.len() as f64;
            seen += chunk.len();
        }
        let train_loss = sum / seen as f64;
        let val_loss = val_set.as_ref().map(|v| evaluate(model, v)).transpose()?;
        if !train_loss.is_finite() || val_loss.is_some_and(|v| !v.is_finite()) {
            return Err(NetError::Diverged { epoch });
        }
        report.epochs.push(EpochLoss { epoch, train_loss, val_loss });
        report.epochs_run = epoch;

        let monitored = val_loss.unwrap_or(train_loss);
        if best.as_ref().is_none_or(|b| monitored < b.0) {
            best = Some((monitored, model.params().to_vec(), model.buffers().to_vec()));
            report.best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if config.patience.is_some_and(|p| since_best >= p) {
                break;
            }
        }
    }
    if let Some((_, params, buffers)) = best {
        model.params_mut().copy_from_slice(&params);
        model.buffers_mut().copy_from_slice(&buffers);
    }
    Ok(report)
}
