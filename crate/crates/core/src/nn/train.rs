use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::{bce_loss, KwsModel};
use super::tensor::Tensor;
use crate::error::{KwsError, Result};
use crate::features::FeaturePair;
use crate::quant::fake_quantize_weights;
use crate::Class;

pub const DEFAULT_LEARNING_RATE: f32 = 0.001;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Optimizer {
    /// Plain mini-batch gradient descent.
    Sgd,
    /// Adam with β = (0.9, 0.999), ε = 1e-7.
    Adam,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f32,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub optimizer: Optimizer,
    /// Forward/backward through symmetric INT8 fake-quantised weights with a
    /// straight-through gradient to the float weights.
    pub fake_quant: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: DEFAULT_LEARNING_RATE,
            epochs: 5,
            batch_size: 16,
            seed: 0,
            optimizer: Optimizer::Sgd,
            fake_quant: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainReport {
    /// Mean BCE over each epoch, measured during the pass.
    pub epoch_losses: Vec<f64>,
}

struct AdamState {
    m: Vec<Vec<f32>>,
    v: Vec<Vec<f32>>,
    step: i32,
}

/// Trains in place. Sample order is shuffled per epoch from `cfg.seed`, so
/// runs with equal inputs and seeds are bitwise identical.
pub fn train(model: &mut KwsModel<f32>, batch: &[FeaturePair], cfg: &TrainConfig) -> Result<TrainReport> {
    if batch.is_empty() {
        return Err(KwsError::InsufficientData("empty training batch".into()));
    }
    let mut samples = Vec::with_capacity(batch.len());
    let mut seen = [false; 2];
    for pair in batch {
        let class = pair
            .label
            .ok_or_else(|| KwsError::InsufficientData("training sample without a label".into()))?;
        seen[class.index()] = true;
        samples.push((model.input_tensors(pair), class.target()));
    }
    if !(seen[Class::Yes.index()] && seen[Class::No.index()]) {
        warn!("training batch of {} samples holds a single class", batch.len());
    }

    let batch_size = cfg.batch_size.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut adam = AdamState {
        m: model.params().iter().map(|t| vec![0.0; t.len()]).collect(),
        v: model.params().iter().map(|t| vec![0.0; t.len()]).collect(),
        step: 0,
    };
    let mut report = TrainReport::default();

    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0f64;
        for chunk in order.chunks(batch_size) {
            let forward_model = if cfg.fake_quant {
                fake_quantize_weights(model)
            } else {
                model.clone()
            };
            let mut grads = KwsModel::zeros(model.arch);
            for &i in chunk {
                let (inputs, target) = &samples[i];
                let cache = forward_model.forward(inputs.clone())?;
                epoch_loss += bce_loss(cache.logit, *target) as f64;
                forward_model.accumulate_gradients(&cache, *target, &mut grads);
            }
            let scale = 1.0 / chunk.len() as f32;
            apply_update(model, &grads, scale, cfg, &mut adam);
        }
        report.epoch_losses.push(epoch_loss / samples.len() as f64);
    }
    Ok(report)
}

fn apply_update(model: &mut KwsModel<f32>, grads: &KwsModel<f32>, scale: f32, cfg: &TrainConfig, adam: &mut AdamState) {
    let lr = cfg.learning_rate;
    let grads: Vec<&Tensor<f32>> = grads.params();
    match cfg.optimizer {
        Optimizer::Sgd => {
            for (p, g) in model.params_mut().into_iter().zip(grads) {
                for (w, &gv) in p.data_mut().iter_mut().zip(g.data()) {
                    *w -= lr * gv * scale;
                }
            }
        }
        Optimizer::Adam => {
            const B1: f32 = 0.9;
            const B2: f32 = 0.999;
            const EPS: f32 = 1e-7;
            adam.step += 1;
            let c1 = 1.0 - B1.powi(adam.step);
            let c2 = 1.0 - B2.powi(adam.step);
            for (k, (p, g)) in model.params_mut().into_iter().zip(grads).enumerate() {
                let (m, v) = (&mut adam.m[k], &mut adam.v[k]);
                for (j, (w, &gv)) in p.data_mut().iter_mut().zip(g.data()).enumerate() {
                    let gv = gv * scale;
                    m[j] = B1 * m[j] + (1.0 - B1) * gv;
                    v[j] = B2 * v[j] + (1.0 - B2) * gv * gv;
                    *w -= lr * (m[j] / c1) / ((v[j] / c2).sqrt() + EPS);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{FeatureKind, FeatureMap, Provenance};
    use rand::Rng;

    /// Two classes separated by a bright versus dark upper half.
    fn toy_batch(n: usize, seed: u64) -> Vec<FeaturePair> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let class = if i % 2 == 0 { Class::Yes } else { Class::No };
                let mut m = FeatureMap::zeros(FeatureKind::Mfcc);
                for (j, v) in m.values.iter_mut().enumerate() {
                    let bright = (j < 160) == (class == Class::Yes);
                    *v = if bright { 0.8 } else { 0.2 } + rng.random_range(-0.1..0.1);
                }
                let l = FeatureMap {
                    kind: FeatureKind::LogMel,
                    values: m.values,
                };
                FeaturePair {
                    mfcc: m,
                    logmel: l,
                    label: Some(class),
                    provenance: Provenance::Rehearsal,
                }
            })
            .collect()
    }

    #[test]
    fn zero_learning_rate_is_a_no_op() {
        let mut model = KwsModel::dual(3);
        let before = model.clone();
        for optimizer in [Optimizer::Sgd, Optimizer::Adam] {
            let cfg = TrainConfig {
                learning_rate: 0.0,
                epochs: 2,
                optimizer,
                ..Default::default()
            };
            train(&mut model, &toy_batch(8, 1), &cfg).unwrap();
            assert_eq!(model, before);
        }
    }

    #[test]
    fn loss_decreases_on_separable_toy() {
        let mut model = KwsModel::dual(5);
        let cfg = TrainConfig {
            epochs: 10,
            batch_size: 4,
            ..Default::default()
        };
        let report = train(&mut model, &toy_batch(32, 2), &cfg).unwrap();
        assert_eq!(report.epoch_losses.len(), 10);
        for w in report.epoch_losses.windows(2) {
            assert!(w[1] < w[0], "{:?}", report.epoch_losses);
        }
    }

    #[test]
    fn same_seed_same_parameters() {
        let batch = toy_batch(16, 3);
        let cfg = TrainConfig {
            epochs: 3,
            batch_size: 5,
            optimizer: Optimizer::Adam,
            seed: 9,
            ..Default::default()
        };
        let mut a = KwsModel::dual(1);
        let mut b = KwsModel::dual(1);
        train(&mut a, &batch, &cfg).unwrap();
        train(&mut b, &batch, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_or_unlabeled_batches_fail() {
        let mut model = KwsModel::dual(1);
        assert!(train(&mut model, &[], &TrainConfig::default()).is_err());
        let mut batch = toy_batch(2, 1);
        batch[0].label = None;
        assert!(train(&mut model, &batch, &TrainConfig::default()).is_err());
    }

    #[test]
    fn single_class_batch_still_trains() {
        let mut model = KwsModel::dual(1);
        let batch: Vec<_> = toy_batch(8, 1)
            .into_iter()
            .filter(|p| p.label == Some(Class::Yes))
            .collect();
        let report = train(
            &mut model,
            &batch,
            &TrainConfig {
                epochs: 1,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(report.epoch_losses.len(), 1);
    }

    #[test]
    fn fake_quant_training_runs() {
        let mut model = KwsModel::dual(2);
        let cfg = TrainConfig {
            epochs: 3,
            fake_quant: true,
            optimizer: Optimizer::Adam,
            ..Default::default()
        };
        let report = train(&mut model, &toy_batch(16, 4), &cfg).unwrap();
        assert!(report.epoch_losses.iter().all(|l| l.is_finite()));
    }
}
