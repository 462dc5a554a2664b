//! Deterministic stand-in for the speech and noise datasets. Keywords are
//! harmonic chirps: `Yes` sweeps upward, `No` sweeps downward, with jittered
//! pitch, extent, timing and level. Noise recordings cover stationary
//! broadband (white, pink), tonal low-frequency (hum) and speech-like
//! non-stationary (babble) conditions.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{saturate_i16, AudioClip, Environment, NoiseRecording, CLIP_LEN, SAMPLE_RATE};
use crate::Class;

const FS: f64 = SAMPLE_RATE as f64;
/// RMS level every synthetic noise recording is normalised to.
const NOISE_RMS: f64 = 3000.0;
/// Background floor under every keyword clip, just below one step of the
/// 8-bit grid, so clean clips never contain exact digital silence.
const KEYWORD_FLOOR_RMS: f64 = 200.0;
/// Length of each noise recording bundled with the test corpus.
pub const SYNTH_NOISE_SECONDS: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SyntheticNoise {
    White,
    Pink,
    Hum,
    Babble,
}

impl SyntheticNoise {
    pub const ALL: [SyntheticNoise; 4] = [
        SyntheticNoise::White,
        SyntheticNoise::Pink,
        SyntheticNoise::Hum,
        SyntheticNoise::Babble,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SyntheticNoise::White => "white",
            SyntheticNoise::Pink => "pink",
            SyntheticNoise::Hum => "hum",
            SyntheticNoise::Babble => "babble",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    /// Interleaved `Yes`, `No`, `Yes`, ... keyword clips.
    pub clips: Vec<AudioClip>,
    pub noises: Vec<NoiseRecording>,
}

/// `n_per_class` clips of each keyword plus one recording per synthetic
/// noise kind. Identical seeds give bitwise identical corpora.
pub fn synth_test_corpus(n_per_class: usize, seed: u64) -> SyntheticCorpus {
    let clips = synth_keywords(n_per_class, seed);
    let noises = SyntheticNoise::ALL
        .iter()
        .enumerate()
        .map(|(i, &kind)| synth_noise_recording(kind, SYNTH_NOISE_SECONDS, mix_seed(seed, 1 << 40 | i as u64)))
        .collect();
    SyntheticCorpus { clips, noises }
}

pub fn synth_keywords(n_per_class: usize, seed: u64) -> Vec<AudioClip> {
    (0..n_per_class)
        .flat_map(|i| {
            [Class::Yes, Class::No].map(|class| {
                let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, (2 * i + class.index()) as u64));
                synth_keyword(class, &mut rng)
            })
        })
        .collect()
}

fn mix_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finaliser
    let mut z = seed
        .wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn synth_keyword(class: Class, rng: &mut impl Rng) -> AudioClip {
    let duration = rng.random_range(0.35..0.6);
    let onset = rng.random_range(0.05..(0.95 - duration));
    let f_low: f64 = rng.random_range(250.0..450.0);
    let f_high = f_low * rng.random_range(2.2..3.0);
    let (f_start, f_end) = match class {
        Class::Yes => (f_low, f_high),
        Class::No => (f_high, f_low),
    };
    let peak = rng.random_range(3000.0..6000.0);
    let h2 = rng.random_range(0.3..0.6);
    let h3 = rng.random_range(0.1..0.3);
    let floor = Normal::new(0.0, KEYWORD_FLOOR_RMS).unwrap();

    let n_tone = (duration * FS) as usize;
    let start = (onset * FS) as usize;
    let mut phase = 0.0f64;
    let mut samples = vec![0.0f64; CLIP_LEN];
    for i in 0..n_tone {
        let u = i as f64 / n_tone as f64;
        // Exponential sweep.
        let f = f_start * (f_end / f_start).powf(u);
        phase += 2.0 * PI * f / FS;
        let tone = phase.sin() + h2 * (2.0 * phase).sin() + h3 * (3.0 * phase).sin();
        let env = envelope(i as f64 / FS, duration, 0.03, 0.06);
        samples[start + i] = peak * env * tone / (1.0 + h2 + h3);
    }
    let pcm = samples
        .into_iter()
        .map(|s| saturate_i16(s + floor.sample(rng)))
        .collect();
    AudioClip::keyword(pcm, class)
}

/// Raised-cosine attack/release envelope.
fn envelope(t: f64, duration: f64, attack: f64, release: f64) -> f64 {
    if t < attack {
        0.5 - 0.5 * (PI * t / attack).cos()
    } else if t > duration - release {
        let r = (duration - t).max(0.0) / release;
        0.5 - 0.5 * (PI * r).cos()
    } else {
        1.0
    }
}

pub fn synth_noise_recording(kind: SyntheticNoise, duration_s: f64, seed: u64) -> NoiseRecording {
    let n = (duration_s * FS).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = match kind {
        SyntheticNoise::White => white(n, &mut rng),
        SyntheticNoise::Pink => pink(n, &mut rng),
        SyntheticNoise::Hum => hum(n, &mut rng),
        SyntheticNoise::Babble => babble(n, &mut rng),
    };
    let rms = (raw.iter().map(|x| x * x).sum::<f64>() / n.max(1) as f64).sqrt();
    let g = if rms > 0.0 { NOISE_RMS / rms } else { 0.0 };
    NoiseRecording {
        samples: raw.into_iter().map(|x| saturate_i16(g * x)).collect(),
        environment: Environment::Synthetic(kind),
    }
}

fn white(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let normal = Normal::new(0.0, 1.0).unwrap();
    (0..n).map(|_| normal.sample(rng)).collect()
}

/// Paul Kellet's refined pink filter over white noise.
fn pink(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut b = [0.0f64; 7];
    (0..n)
        .map(|_| {
            let w = normal.sample(rng);
            b[0] = 0.99886 * b[0] + w * 0.0555179;
            b[1] = 0.99332 * b[1] + w * 0.0750759;
            b[2] = 0.96900 * b[2] + w * 0.1538520;
            b[3] = 0.86650 * b[3] + w * 0.3104856;
            b[4] = 0.55000 * b[4] + w * 0.5329522;
            b[5] = -0.7616 * b[5] - w * 0.0168980;
            let out = b.iter().sum::<f64>() + w * 0.5362;
            b[6] = w * 0.115926;
            out
        })
        .collect()
}

/// Engine-like noise: a drifting fundamental with harmonics over brown noise.
fn hum(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let base = rng.random_range(35.0..60.0);
    let harmonics: Vec<f64> = (1..=12).map(|k| rng.random_range(0.3..1.0) / k as f64).collect();
    let drift_rate = rng.random_range(0.05..0.2);
    let mut phase = 0.0;
    let mut brown = 0.0;
    (0..n)
        .map(|i| {
            let t = i as f64 / FS;
            let f = base * (1.0 + 0.15 * (2.0 * PI * drift_rate * t).sin());
            phase += 2.0 * PI * f / FS;
            let tonal: f64 = harmonics
                .iter()
                .enumerate()
                .map(|(k, &a)| a * ((k + 1) as f64 * phase).sin())
                .sum();
            brown = 0.995 * brown + normal.sample(rng);
            tonal + 0.02 * brown
        })
        .collect()
}

/// Overlapping "talkers", each a train of voiced syllables with a random
/// pitch contour and two formant resonances.
fn babble(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    const TALKERS: usize = 6;
    const HARMONICS: usize = 14;
    let mut out = vec![0.0f64; n];
    for _ in 0..TALKERS {
        let mut pos = rng.random_range(0..(FS as usize / 4)).min(n);
        while pos < n {
            let len = ((rng.random_range(0.12..0.35) * FS) as usize).min(n - pos);
            let f0 = rng.random_range(110.0..260.0);
            let slope = rng.random_range(-0.3..0.3);
            let f1 = rng.random_range(300.0..900.0);
            let f2 = rng.random_range(900.0..2500.0);
            let level = rng.random_range(0.5..1.0);
            let mut phase = 0.0f64;
            for i in 0..len {
                let u = i as f64 / len as f64;
                let f = f0 * (1.0 + slope * u);
                phase += 2.0 * PI * f / FS;
                let env = envelope(i as f64 / FS, len as f64 / FS, 0.02, 0.04);
                let mut s = 0.0;
                for k in 1..=HARMONICS {
                    let fk = f * k as f64;
                    if fk > 4000.0 {
                        break;
                    }
                    let formant =
                        (-((fk - f1) / 150.0).powi(2)).exp() + 0.6 * (-((fk - f2) / 200.0).powi(2)).exp() + 0.05;
                    s += formant * (k as f64 * phase).sin();
                }
                out[pos + i] += level * env * s;
            }
            pos += len + (rng.random_range(0.02..0.15) * FS) as usize;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_is_deterministic() {
        let a = synth_test_corpus(1, 7);
        let b = synth_test_corpus(1, 7);
        assert_eq!(a.clips, b.clips);
        assert_eq!(a.noises, b.noises);
        assert_ne!(synth_keywords(1, 8), a.clips);
    }

    #[test]
    fn corpus_counts() {
        let clips = synth_keywords(100, 1);
        assert_eq!(clips.len(), 200);
        assert_eq!(clips.iter().filter(|c| c.class() == Some(Class::Yes)).count(), 100);
        assert_eq!(clips.iter().filter(|c| c.class() == Some(Class::No)).count(), 100);
        assert!(clips.iter().all(|c| c.len() == CLIP_LEN && c.power() > 0.0));
    }

    #[test]
    fn noise_recordings_have_target_level() {
        for kind in SyntheticNoise::ALL {
            let rec = synth_noise_recording(kind, 2.0, 3);
            assert_eq!(rec.samples.len(), 32_000);
            let rms = super::super::mean_power(&rec.samples).sqrt();
            assert!((rms - NOISE_RMS).abs() < 5.0, "{kind:?} rms {rms}");
        }
    }
}
