//! Training loop for the neural surface, driven by a caller-supplied
//! gradient stream.

use super::{NeuralSdf, TopologyError};
use crate::math::Pt3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrainOptimizer {
    Adam { beta1: f64, beta2: f64, eps: f64 },
    Sgd,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSchedule {
    pub epochs: usize,
    pub learning_rate: f64,
    pub optimizer: TrainOptimizer,
}

impl Default for TrainSchedule {
    fn default() -> Self {
        TrainSchedule {
            epochs: 10_000,
            learning_rate: 3e-6,
            optimizer: TrainOptimizer::Adam { beta1: 0.9, beta2: 0.999, eps: 1e-8 },
        }
    }
}

/// Run metadata returned by [`train_neural_sdf`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs_run: usize,
    pub learning_rate: f64,
    pub final_loss: f64,
}

/// Applies the schedule's optimizer to a stream of `(loss, gradient)` pairs.
///
/// On divergence (non-finite loss or gradient) the parameters are restored
/// to the last finite checkpoint and an error is returned.
pub fn train_neural_sdf<F>(
    sdf: &mut NeuralSdf,
    schedule: &TrainSchedule,
    mut grad_fn: F,
) -> Result<TrainReport, TopologyError>
where
    F: FnMut(&NeuralSdf, usize) -> (f64, Vec<f64>),
{
    let n = sdf.param_count();
    let mut m = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut checkpoint = sdf.params.clone();
    let mut last_loss = f64::NAN;
    for epoch in 0..schedule.epochs {
        let (loss, grad) = grad_fn(sdf, epoch);
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            sdf.params = checkpoint;
            return Err(TopologyError::Divergence { epoch });
        }
        checkpoint.copy_from_slice(&sdf.params);
        last_loss = loss;
        match schedule.optimizer {
            TrainOptimizer::Adam { beta1, beta2, eps } => {
                let t = (epoch + 1) as f64;
                let bc1 = 1.0 - beta1.powf(t);
                let bc2 = 1.0 - beta2.powf(t);
                for i in 0..n {
                    m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
                    v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
                    let m_hat = m[i] / bc1;
                    let v_hat = v[i] / bc2;
                    sdf.params[i] -= schedule.learning_rate * m_hat / (v_hat.sqrt() + eps);
                }
            }
            TrainOptimizer::Sgd => {
                for i in 0..n {
                    sdf.params[i] -= schedule.learning_rate * grad[i];
                }
            }
        }
    }
    Ok(TrainReport {
        epochs_run: schedule.epochs,
        learning_rate: schedule.learning_rate,
        final_loss: last_loss,
    })
}

/// Convenience regression: fits the network to `(point, signed distance)`
/// samples under mean squared error, drawing fresh dropout masks per epoch
/// when the rate is nonzero.
pub fn fit_sdf_samples(
    sdf: &mut NeuralSdf,
    points: &[Pt3],
    targets: &[f64],
    schedule: &TrainSchedule,
    seed: u64,
) -> Result<TrainReport, TopologyError> {
    assert_eq!(points.len(), targets.len());
    let n_samples = points.len() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    train_neural_sdf(sdf, schedule, |net, _epoch| {
        let masks = if net.dropout_rate > 0.0 {
            Some(net.sample_dropout_masks(&mut rng))
        } else {
            None
        };
        let preds: Vec<f64> = points
            .iter()
            .map(|p| match &masks {
                Some(m) => net.forward_dropout(p, m),
                None => net.forward(p),
            })
            .collect();
        let loss = preds
            .iter()
            .zip(targets)
            .map(|(p, t)| (p - t) * (p - t))
            .sum::<f64>()
            / n_samples;
        let ds: Vec<f64> = preds
            .iter()
            .zip(targets)
            .map(|(p, t)| 2.0 * (p - t) / n_samples)
            .collect();
        let grad = net.sdf_vjp(points, &ds, masks.as_ref());
        (loss, grad)
    })
}
