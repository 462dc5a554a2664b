//! Front end from 16-bit audio to model-ready feature pairs, with each
//! denoiser switchable for ablations.

use crate::audio::AudioClip;
use crate::error::Result;
use crate::features::{FeatureExtractor, FeaturePair};
use crate::spectral::{denoise_pair, normalize_pair, DenoiseConfig};
use crate::wavelet::{denoise_clip, quantize_clip};

#[derive(Debug, Clone)]
pub struct FrontEnd {
    extractor: FeatureExtractor,
    pub wavelet: bool,
    /// `None` skips spectral denoising; maps are still scaled to [0, 1].
    pub spectral: Option<DenoiseConfig>,
}

impl FrontEnd {
    pub fn new(wavelet: bool, spectral: Option<DenoiseConfig>) -> Self {
        FrontEnd {
            extractor: FeatureExtractor::new(),
            wavelet,
            spectral,
        }
    }

    /// Both denoisers on at the given α.
    pub fn full(alpha: f64) -> Result<Self> {
        Ok(Self::new(true, Some(DenoiseConfig::new(alpha)?)))
    }

    pub fn extractor(&self) -> &FeatureExtractor {
        &self.extractor
    }

    /// Features after the waveform stage, before any map-level processing.
    /// Carries the clip's keyword label if it has one.
    pub fn raw_pair(&self, clip: &AudioClip) -> Result<FeaturePair> {
        let clip8 = if self.wavelet {
            denoise_clip(clip)
        } else {
            quantize_clip(clip)
        };
        let mut pair = self.extractor.extract_pair(&clip8)?;
        pair.label = clip.class();
        Ok(pair)
    }

    /// Map-level stage: spectral denoising or plain normalisation.
    pub fn finish(&self, raw: &FeaturePair) -> FeaturePair {
        match &self.spectral {
            Some(cfg) => denoise_pair(raw, cfg),
            None => normalize_pair(raw),
        }
    }

    pub fn process(&self, clip: &AudioClip) -> Result<FeaturePair> {
        Ok(self.finish(&self.raw_pair(clip)?))
    }
}

impl Default for FrontEnd {
    fn default() -> Self {
        Self::new(true, Some(DenoiseConfig::default()))
    }
}
