//! Analytic gradients against central finite differences.

use metersentry_core::nn::{mse_loss, ConvAutoencoder, Mode, Sgd, Tensor3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EPS: f64 = 1e-5;

fn random_input(rng: &mut ChaCha8Rng, batch: usize, len: usize) -> Tensor3 {
    Tensor3::from_vec(batch, len, 1, (0..batch * len).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect())
}

/// Train-mode loss at the model's current parameters; running statistics
/// are restored so repeated evaluations see identical state.
fn loss_at(model: &mut ConvAutoencoder, x: &Tensor3, target: &Tensor3) -> f64 {
    let saved = model.buffers().to_vec();
    let out = model.forward(x, Mode::Train).unwrap();
    model.clear_cache();
    model.buffers_mut().copy_from_slice(&saved);
    mse_loss(&out, target).0
}

fn max_relative_error(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = ConvAutoencoder::canonical(8);
    model.init_weights(seed);
    for p in model.params_mut() {
        *p += (rng.random::<f64>() - 0.5) * 0.2;
    }
    let x = random_input(&mut rng, 3, 8);
    let target = random_input(&mut rng, 3, 8);

    let saved = model.buffers().to_vec();
    let out = model.forward(&x, Mode::Train).unwrap();
    model.buffers_mut().copy_from_slice(&saved);
    let (_, grad_out) = mse_loss(&out, &target);
    let (grads, _) = model.backward(&grad_out).unwrap();

    let mut worst: f64 = 0.0;
    for i in 0..model.params().len() {
        let orig = model.params()[i];
        model.params_mut()[i] = orig + EPS;
        let up = loss_at(&mut model, &x, &target);
        model.params_mut()[i] = orig - EPS;
        let down = loss_at(&mut model, &x, &target);
        model.params_mut()[i] = orig;
        let numeric = (up - down) / (2.0 * EPS);
        let analytic = grads.values[i];
        let denom = analytic.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max((analytic - numeric).abs() / denom);
    }
    worst
}

#[test]
fn analytic_matches_finite_difference() {
    for seed in 0..10 {
        let err = max_relative_error(seed);
        assert!(err < 1e-4, "seed {seed}: max relative error {err:e}");
    }
}

#[test]
fn input_gradient_matches_finite_difference() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut model = ConvAutoencoder::canonical(8);
    model.init_weights(7);
    let mut x = random_input(&mut rng, 2, 8);
    let target = random_input(&mut rng, 2, 8);
    let saved = model.buffers().to_vec();
    let out = model.forward(&x, Mode::Train).unwrap();
    model.buffers_mut().copy_from_slice(&saved);
    let (_, g) = mse_loss(&out, &target);
    let (_, dx) = model.backward(&g).unwrap();
    for i in 0..16 {
        let orig = x.as_slice()[i];
        x.as_mut_slice()[i] = orig + EPS;
        let up = loss_at(&mut model, &x, &target);
        x.as_mut_slice()[i] = orig - EPS;
        let down = loss_at(&mut model, &x, &target);
        x.as_mut_slice()[i] = orig;
        let numeric = (up - down) / (2.0 * EPS);
        let a = dx.as_slice()[i];
        assert!((a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6) < 1e-4);
    }
}

#[test]
fn full_batch_descent_does_not_increase_loss() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut model = ConvAutoencoder::canonical(8);
    model.init_weights(5);
    let x = random_input(&mut rng, 6, 8);
    let sgd = Sgd { learning_rate: 1e-3 };
    let mut prev = f64::INFINITY;
    for _ in 0..10 {
        let out = model.forward(&x, Mode::Train).unwrap();
        let (loss, g) = mse_loss(&out, &x);
        assert!(loss <= prev + 1e-12, "loss rose from {prev} to {loss}");
        prev = loss;
        let (grads, _) = model.backward(&g).unwrap();
        sgd.step(model.params_mut(), &grads.values);
    }
}
