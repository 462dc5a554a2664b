use log::warn;

use super::QuantParams;
use crate::error::{KwsError, Result};
use crate::features::FeaturePair;
use crate::nn::KwsModel;

pub const MIN_CALIBRATION_SAMPLES: usize = 16;

/// Activation quantisation parameters for every site of the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    /// Per path input map.
    pub inputs: Vec<QuantParams>,
    /// Per path outputs of conv1 and conv2.
    pub hidden: Vec<[QuantParams; 2]>,
    /// Concatenated conv3 outputs, shared by all paths.
    pub latent: QuantParams,
    pub logit: QuantParams,
    pub prob: QuantParams,
}

#[derive(Clone, Copy)]
struct Range {
    lo: f32,
    hi: f32,
}

impl Range {
    const EMPTY: Range = Range {
        lo: f32::INFINITY,
        hi: f32::NEG_INFINITY,
    };

    fn update(&mut self, values: &[f32]) {
        for &v in values {
            self.lo = self.lo.min(v);
            self.hi = self.hi.max(v);
        }
    }

    fn params(self) -> QuantParams {
        QuantParams::from_range(self.lo, self.hi)
    }
}

/// Min/max calibration over the float forward pass of `batch`.
pub fn calibrate(model: &KwsModel<f32>, batch: &[FeaturePair]) -> Result<Calibration> {
    if batch.is_empty() {
        return Err(KwsError::Calibration("empty calibration batch".into()));
    }
    if batch.len() < MIN_CALIBRATION_SAMPLES {
        warn!(
            "calibrating on {} samples (fewer than {MIN_CALIBRATION_SAMPLES})",
            batch.len()
        );
    }
    let n = model.arch.n_paths();
    let mut inputs = vec![Range::EMPTY; n];
    let mut hidden = vec![[Range::EMPTY; 2]; n];
    let mut latent = Range::EMPTY;
    let mut logit = Range::EMPTY;
    for pair in batch {
        let cache = model.forward(model.input_tensors(pair))?;
        for p in 0..n {
            inputs[p].update(cache.inputs[p].data());
            hidden[p][0].update(cache.activations[p][0].data());
            hidden[p][1].update(cache.activations[p][1].data());
        }
        latent.update(&cache.latent);
        logit.update(&[cache.logit]);
    }
    Ok(Calibration {
        inputs: inputs.into_iter().map(Range::params).collect(),
        hidden: hidden.into_iter().map(|[a, b]| [a.params(), b.params()]).collect(),
        latent: latent.params(),
        logit: logit.params(),
        prob: QuantParams::probability(),
    })
}
