//! Deployment streams: each interval holds a fixed number of keyword clips
//! of each class mixed into environment noise at the target SNR, and
//! noise-only clips for the remainder, in seeded random order.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::audio::{mix_at_snr, noise_at_power, AudioClip, MixSpec, NoiseRecording, CLIP_LEN};
use crate::class::Class;
use crate::error::{KwsError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamSpec {
    pub snr_db: f64,
    pub intervals: usize,
    pub interval: usize,
    pub keywords_per_class: usize,
    pub seed: u64,
}

/// Lazily generated stream; one interval is materialised at a time.
pub struct DeploymentStream<'a> {
    yes: Vec<&'a AudioClip>,
    no: Vec<&'a AudioClip>,
    noise: &'a NoiseRecording,
    spec: StreamSpec,
    noise_power: f64,
}

/// Mean power of the clean keyword pool, the reference for noise-only
/// items: those are scaled to `reference / 10^(snr/10)`.
pub fn reference_power(keywords: &[AudioClip]) -> f64 {
    if keywords.is_empty() {
        return 0.0;
    }
    keywords.iter().map(AudioClip::power).sum::<f64>() / keywords.len() as f64
}

impl<'a> DeploymentStream<'a> {
    pub fn new(keywords: &'a [AudioClip], noise: &'a NoiseRecording, spec: StreamSpec) -> Result<Self> {
        let pick = |c: Class| keywords.iter().filter(|k| k.class() == Some(c)).collect::<Vec<_>>();
        let (yes, no) = (pick(Class::Yes), pick(Class::No));
        if spec.keywords_per_class > 0 && (yes.is_empty() || no.is_empty()) {
            return Err(KwsError::Dataset("stream needs keyword clips of both classes".into()));
        }
        if 2 * spec.keywords_per_class > spec.interval {
            return Err(KwsError::Usage("keyword items exceed the interval length".into()));
        }
        let noise_power = reference_power(keywords) / 10f64.powf(spec.snr_db / 10.0);
        Ok(DeploymentStream {
            yes,
            no,
            noise,
            spec,
            noise_power,
        })
    }

    pub fn spec(&self) -> &StreamSpec {
        &self.spec
    }

    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }

    pub fn interval(&self, k: usize) -> Result<Vec<AudioClip>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.spec.seed ^ (k as u64).wrapping_mul(0xA24B_AED4_963E_E407));
        let n_kw = self.spec.keywords_per_class;
        let mut items = Vec::with_capacity(self.spec.interval);
        for pool in [&self.yes, &self.no] {
            for _ in 0..n_kw {
                let clean = *pool.choose(&mut rng).expect("pool checked non-empty");
                let mix = MixSpec::random(self.spec.snr_db, self.noise, CLIP_LEN, rng.random())?;
                items.push(mix_at_snr(clean, self.noise, &mix)?);
            }
        }
        for _ in 2 * n_kw..self.spec.interval {
            let offset = self.noise.random_offset(CLIP_LEN, &mut rng)?;
            items.push(noise_at_power(self.noise, offset, CLIP_LEN, self.noise_power)?);
        }
        items.shuffle(&mut rng);
        Ok(items)
    }

    pub fn intervals(&self) -> impl Iterator<Item = Result<Vec<AudioClip>>> + '_ {
        (0..self.spec.intervals).map(move |k| self.interval(k))
    }

    /// Noise-only clips at the deployed level, e.g. for rehearsal
    /// augmentation; drawn independently of the stream items.
    pub fn noise_clips(&self, n: usize) -> Result<Vec<AudioClip>> {
        let mut rng = ChaCha8Rng::seed_from_u64(!self.spec.seed);
        (0..n)
            .map(|_| {
                let offset = self.noise.random_offset(CLIP_LEN, &mut rng)?;
                noise_at_power(self.noise, offset, CLIP_LEN, self.noise_power)
            })
            .collect()
    }
}
