use crate::class::Class;
use crate::features::FeaturePair;
use crate::prototypes::{mae_distance, Artifacts};
use crate::quant::QuantizedModel;

/// Runtime input accepted as a pseudo-labelled training sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveSample {
    pub pair: FeaturePair,
    pub pseudo_label: Class,
    pub confidence_q: u8,
    pub distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rejection {
    LowConfidence { confidence_q: u8 },
    FarFromPrototype { distance: f64, threshold: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Verdict {
    Accept { distance: f64 },
    Reject(Rejection),
}

/// Counts prototype distance evaluations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DistanceCounter {
    pub distance_ops: u64,
}

/// Selection rule on already-computed inference outputs. The distance is
/// only evaluated once the confidence test has passed.
pub fn decide(
    confidence_q: u8,
    predicted: Class,
    latent: &[f32],
    artifacts: &Artifacts,
    threshold_q: u8,
    counter: &mut DistanceCounter,
) -> Verdict {
    if confidence_q < threshold_q {
        return Verdict::Reject(Rejection::LowConfidence { confidence_q });
    }
    let class = artifacts.get(predicted);
    counter.distance_ops += 1;
    let distance = mae_distance(latent, &class.prototype).unwrap_or(f64::INFINITY);
    if distance <= class.threshold {
        Verdict::Accept { distance }
    } else {
        Verdict::Reject(Rejection::FarFromPrototype {
            distance,
            threshold: class.threshold,
        })
    }
}

/// Integer inference on a denoised pair followed by [`decide`].
pub fn filter_effective(
    qm: &QuantizedModel,
    artifacts: &Artifacts,
    pair: &FeaturePair,
    threshold_q: u8,
    counter: &mut DistanceCounter,
) -> Result<EffectiveSample, Rejection> {
    let out = qm.infer(pair);
    let latent = if out.confidence_q >= threshold_q {
        qm.dequantize_latent(&out.latent)
    } else {
        Vec::new()
    };
    match decide(out.confidence_q, out.class, &latent, artifacts, threshold_q, counter) {
        Verdict::Accept { distance } => {
            let mut pair = pair.clone();
            pair.label = Some(out.class);
            Ok(EffectiveSample {
                pair,
                pseudo_label: out.class,
                confidence_q: out.confidence_q,
                distance,
            })
        }
        Verdict::Reject(r) => Err(r),
    }
}
