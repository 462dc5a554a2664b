//! Shared fixtures for the benchmarks in `benches/`.

use kws_core::audio::{
    mix_at_snr, synth_keywords, synth_noise_recording, AudioClip, MixSpec, SyntheticNoise, CLIP_LEN,
};
use kws_core::features::FeaturePair;
use kws_core::nn::KwsModel;
use kws_core::pipeline::FrontEnd;
use kws_core::quant::{calibrate, quantize_model, QuantizedModel};

/// Keyword clips mixed with white noise at 0 dB.
pub fn noisy_clips(n_per_class: usize) -> Vec<AudioClip> {
    let noise = synth_noise_recording(SyntheticNoise::White, 5.0, 1);
    synth_keywords(n_per_class, 2)
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let spec = MixSpec::random(0.0, &noise, CLIP_LEN, i as u64).expect("noise is long enough");
            mix_at_snr(c, &noise, &spec).expect("non-degenerate mix")
        })
        .collect()
}

pub fn processed_pairs(clips: &[AudioClip]) -> Vec<FeaturePair> {
    let front = FrontEnd::default();
    clips.iter().map(|c| front.process(c).expect("valid clip")).collect()
}

pub fn quantized(model: &KwsModel<f32>, pairs: &[FeaturePair]) -> QuantizedModel {
    quantize_model(model, &calibrate(model, pairs).expect("calibration")).expect("quantisation")
}
