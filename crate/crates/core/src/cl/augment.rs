use crate::audio::AudioClip;
use crate::error::Result;
use crate::features::{mfcc_from_logmel, FeatureMap, FeaturePair, Provenance};
use crate::pipeline::FrontEnd;
use crate::spectral::{denoise_pair, DenoiseConfig};

/// LogMel maps of environment noise clips, through the same waveform
/// stage as runtime inputs.
pub fn noise_logmels(front: &FrontEnd, clips: &[AudioClip]) -> Result<Vec<FeatureMap>> {
    clips.iter().map(|c| front.raw_pair(c).map(|p| p.logmel)).collect()
}

/// Adds noise energy to a clean pair in the mel power domain:
/// `ln(exp(clean) + exp(noise))` per cell, MFCC recomputed from the result.
pub fn augment_pair(clean: &FeaturePair, noise_logmel: &FeatureMap) -> FeaturePair {
    let mut logmel = clean.logmel.clone();
    for (v, &n) in logmel.values.iter_mut().zip(&noise_logmel.values) {
        let (c, n) = (*v as f64, n as f64);
        let hi = c.max(n);
        *v = (hi + ((c - hi).exp() + (n - hi).exp()).ln()) as f32;
    }
    FeaturePair {
        mfcc: mfcc_from_logmel(&logmel),
        logmel,
        label: clean.label,
        provenance: Provenance::Augmented,
    }
}

/// One augmented copy of every rehearsal entry, noise maps used in turn,
/// followed by spectral denoising only.
pub fn augment_rehearsal(
    entries: &[FeaturePair],
    noise: &[FeatureMap],
    spectral: Option<&DenoiseConfig>,
) -> Vec<FeaturePair> {
    if noise.is_empty() {
        return Vec::new();
    }
    entries
        .iter()
        .zip(noise.iter().cycle())
        .map(|(e, n)| {
            let aug = augment_pair(e, n);
            match spectral {
                Some(cfg) => denoise_pair(&aug, cfg),
                None => aug,
            }
        })
        .collect()
}
