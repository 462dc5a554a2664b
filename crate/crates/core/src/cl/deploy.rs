use log::{debug, info};
use rayon::prelude::*;

use super::Rejection;
use super::{
    augment_pair, decide, ClConfig, DistanceCounter, EffectiveBuffer, EffectiveSample, RehearsalBuffer, Verdict,
};
use crate::audio::AudioClip;
use crate::error::{KwsError, Result};
use crate::features::{FeatureMap, FeaturePair};
use crate::nn::{train, KwsModel, TrainConfig};
use crate::pipeline::FrontEnd;
use crate::prototypes::{compute_artifacts, Artifacts, LabeledLatent};
use crate::quant::{calibrate, dequantize_model, quantize_model, QuantizedModel};

pub const HISTOGRAM_BINS: usize = 8;

/// Everything the device keeps between inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct ClState {
    pub model: KwsModel<f32>,
    pub qm: QuantizedModel,
    pub artifacts: Artifacts,
    pub rehearsal: RehearsalBuffer,
    pub effective: EffectiveBuffer,
    pub updates: usize,
}

impl ClState {
    pub fn new(
        model: KwsModel<f32>,
        qm: QuantizedModel,
        artifacts: Artifacts,
        rehearsal: RehearsalBuffer,
        cfg: &ClConfig,
    ) -> Self {
        ClState {
            model,
            qm,
            artifacts,
            rehearsal,
            effective: EffectiveBuffer::new(cfg.effective_capacity),
            updates: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpdateReport {
    pub n_rehearsal: usize,
    pub n_augmented: usize,
    pub n_effective: usize,
    pub epoch_losses: Vec<f64>,
}

/// Labelled latents of `batch` from the integer model, dequantised.
pub fn quantized_latents(qm: &QuantizedModel, batch: &[FeaturePair]) -> Vec<LabeledLatent> {
    batch
        .par_iter()
        .filter_map(|p| {
            p.label.map(|class| LabeledLatent {
                latent: qm.dequantize_latent(&qm.infer(p).latent),
                class,
            })
        })
        .collect()
}

/// One update: build the mini-batch from rehearsal, noise-augmented
/// rehearsal and effective samples; retrain the dequantised model;
/// recalibrate and requantise; refresh prototypes with the new integer
/// model; drop the consumed effective samples.
pub fn continual_update(
    state: &mut ClState,
    noise: &[FeatureMap],
    front: &FrontEnd,
    cfg: &ClConfig,
) -> Result<UpdateReport> {
    if state.rehearsal.is_empty() {
        return Err(KwsError::EmptyRehearsal);
    }
    let entries = state.rehearsal.entries();
    let mut batch: Vec<FeaturePair> = entries.iter().map(|e| front.finish(e)).collect();
    let n_rehearsal = batch.len();
    if !noise.is_empty() {
        batch.extend(
            entries
                .iter()
                .zip(noise.iter().cycle())
                .map(|(e, n)| front.finish(&augment_pair(e, n))),
        );
    }
    let n_augmented = batch.len() - n_rehearsal;
    let n_effective = state.effective.len();
    batch.extend(state.effective.iter().map(|s| s.pair.clone()));

    let mut model = dequantize_model(&state.qm);
    let train_cfg = TrainConfig {
        seed: cfg.train.seed.wrapping_add(state.updates as u64 + 1),
        ..cfg.train.clone()
    };
    let report = train(&mut model, &batch, &train_cfg)?;
    let calibration = calibrate(&model, &batch)?;
    let qm = quantize_model(&model, &calibration)?;
    let artifacts = compute_artifacts(&quantized_latents(&qm, &batch), cfg.n_sigma)?;

    state.model = model;
    state.qm = qm;
    state.artifacts = artifacts;
    state.effective.clear();
    state.updates += 1;
    debug!(
        "update {}: {n_rehearsal} rehearsal, {n_augmented} augmented, {n_effective} effective, loss {:?}",
        state.updates,
        report.epoch_losses.last()
    );
    Ok(UpdateReport {
        n_rehearsal,
        n_augmented,
        n_effective,
        epoch_losses: report.epoch_losses,
    })
}

/// Counters for one interval of the deployment stream.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IntervalMetrics {
    pub interval: usize,
    pub n_inputs: usize,
    /// Inputs carrying a keyword label; the accuracy denominator.
    pub n_labeled: usize,
    pub n_correct: usize,
    pub n_accepted: usize,
    /// Accepted inputs with a keyword label, and how many of their
    /// pseudo-labels were right.
    pub n_accepted_labeled: usize,
    pub n_accepted_correct: usize,
    pub n_rejected_conf: usize,
    pub n_rejected_dist: usize,
    /// Mean of `confidence_q / 255` over all inputs.
    pub mean_confidence: f64,
    /// Counts of `confidence_q` in 16-wide bins from 128 to 255.
    pub histogram: [u32; HISTOGRAM_BINS],
    pub updated: bool,
}

impl IntervalMetrics {
    pub fn accuracy(&self) -> f64 {
        if self.n_labeled == 0 {
            0.0
        } else {
            self.n_correct as f64 / self.n_labeled as f64
        }
    }
}

/// Streams clips through denoising, integer inference and selection,
/// updating the model after every complete interval when retraining is on.
/// A trailing partial interval is measured but triggers no update.
pub fn run_deployment(
    state: &mut ClState,
    stream: &[AudioClip],
    noise: &[FeatureMap],
    front: &FrontEnd,
    cfg: &ClConfig,
) -> Result<Vec<IntervalMetrics>> {
    cfg.validate()?;
    let chunks = stream.chunks(cfg.interval).map(|c| Ok(c.to_vec()));
    run_intervals(state, chunks, noise, front, cfg)
}

/// [`run_deployment`] over intervals produced on demand, so a long stream
/// never has to be held in memory at once.
pub fn run_intervals<I>(
    state: &mut ClState,
    intervals: I,
    noise: &[FeatureMap],
    front: &FrontEnd,
    cfg: &ClConfig,
) -> Result<Vec<IntervalMetrics>>
where
    I: IntoIterator<Item = Result<Vec<AudioClip>>>,
{
    cfg.validate()?;
    let mut metrics = Vec::new();
    let mut counter = DistanceCounter::default();
    for (k, chunk) in intervals.into_iter().enumerate() {
        let chunk = chunk?;
        if chunk.len() > cfg.interval {
            return Err(KwsError::Usage(format!(
                "interval of {} inputs exceeds configured {}",
                chunk.len(),
                cfg.interval
            )));
        }
        // The model is frozen within an interval, so inputs are independent.
        let qm = &state.qm;
        let processed: Vec<(FeaturePair, crate::quant::QuantizedOutput)> = chunk
            .par_iter()
            .map(|clip| {
                let pair = front.process(clip)?;
                let out = qm.infer(&pair);
                Ok((pair, out))
            })
            .collect::<Result<_>>()?;

        let mut m = IntervalMetrics {
            interval: k,
            n_inputs: chunk.len(),
            ..Default::default()
        };
        let mut conf_sum = 0.0;
        for (pair, out) in processed {
            conf_sum += out.confidence_q as f64 / 255.0;
            let bin = (out.confidence_q.saturating_sub(128) as usize / 16).min(HISTOGRAM_BINS - 1);
            m.histogram[bin] += 1;
            if let Some(label) = pair.label {
                m.n_labeled += 1;
                m.n_correct += usize::from(out.class == label);
            }
            let latent = if out.confidence_q >= cfg.confidence_threshold_q {
                state.qm.dequantize_latent(&out.latent)
            } else {
                Vec::new()
            };
            match decide(
                out.confidence_q,
                out.class,
                &latent,
                &state.artifacts,
                cfg.confidence_threshold_q,
                &mut counter,
            ) {
                Verdict::Accept { distance } => {
                    m.n_accepted += 1;
                    if let Some(label) = pair.label {
                        m.n_accepted_labeled += 1;
                        m.n_accepted_correct += usize::from(out.class == label);
                    }
                    let mut pair = pair;
                    pair.label = Some(out.class);
                    state.effective.push(EffectiveSample {
                        pair,
                        pseudo_label: out.class,
                        confidence_q: out.confidence_q,
                        distance,
                    });
                }
                Verdict::Reject(Rejection::LowConfidence { .. }) => m.n_rejected_conf += 1,
                Verdict::Reject(Rejection::FarFromPrototype { .. }) => m.n_rejected_dist += 1,
            }
        }
        m.mean_confidence = if chunk.is_empty() {
            0.0
        } else {
            conf_sum / chunk.len() as f64
        };
        if cfg.retrain && chunk.len() == cfg.interval {
            continual_update(state, noise, front, cfg)?;
            m.updated = true;
        }
        info!(
            "interval {k}: accuracy {:.4}, accepted {}, rejected {}/{}",
            m.accuracy(),
            m.n_accepted,
            m.n_rejected_conf,
            m.n_rejected_dist
        );
        metrics.push(m);
    }
    Ok(metrics)
}
