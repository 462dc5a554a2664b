//! Audio ingestion: fixed-rate PCM clips, noise recordings, SNR-controlled
//! mixing, WAV loading and a deterministic synthetic corpus.

mod synth;
mod wav;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{KwsError, Result};
use crate::Class;

pub use synth::{
    synth_keyword, synth_keywords, synth_noise_recording, synth_test_corpus, SyntheticCorpus, SyntheticNoise,
    SYNTH_NOISE_SECONDS,
};
pub use wav::{load_noise_recording, load_wav, read_wav_mono_16k, resample, write_wav};

pub const SAMPLE_RATE: u32 = 16_000;
/// Length keyword clips are padded or truncated to (one second).
pub const CLIP_LEN: usize = 16_000;
/// Upper bound on a keyword clip (sixteen 1024-sample analysis frames).
pub const MAX_KEYWORD_LEN: usize = 16_384;
/// Length of a DEMAND recording in seconds.
pub const DEMAND_DURATION_S: f64 = 300.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClipLabel {
    Keyword(Class),
    NoiseOnly,
}

impl ClipLabel {
    pub fn class(self) -> Option<Class> {
        match self {
            ClipLabel::Keyword(c) => Some(c),
            ClipLabel::NoiseOnly => None,
        }
    }
}

/// Mono 16-bit PCM at 16 kHz.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AudioClip {
    samples: Vec<i16>,
    label: Option<ClipLabel>,
}

impl AudioClip {
    /// Builds a clip, enforcing the keyword length bound.
    pub fn new(samples: Vec<i16>, label: Option<ClipLabel>) -> Result<Self> {
        if matches!(label, Some(ClipLabel::Keyword(_))) && samples.len() > MAX_KEYWORD_LEN {
            return Err(KwsError::Shape(format!(
                "keyword clip of {} samples exceeds {MAX_KEYWORD_LEN}",
                samples.len()
            )));
        }
        Ok(AudioClip { samples, label })
    }

    /// Keyword clip zero-padded or truncated to exactly one second.
    pub fn keyword(mut samples: Vec<i16>, class: Class) -> Self {
        samples.resize(CLIP_LEN, 0);
        AudioClip {
            samples,
            label: Some(ClipLabel::Keyword(class)),
        }
    }

    pub fn unlabeled(samples: Vec<i16>) -> Self {
        AudioClip { samples, label: None }
    }

    pub fn with_label(mut self, label: Option<ClipLabel>) -> Self {
        if matches!(label, Some(ClipLabel::Keyword(_))) {
            self.samples.resize(CLIP_LEN, 0);
        }
        self.label = label;
        self
    }

    pub fn samples(&self) -> &[i16] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        SAMPLE_RATE
    }

    pub fn label(&self) -> Option<ClipLabel> {
        self.label
    }

    pub fn class(&self) -> Option<Class> {
        self.label.and_then(ClipLabel::class)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / SAMPLE_RATE as f64
    }

    pub fn power(&self) -> f64 {
        mean_power(&self.samples)
    }
}

/// Output of the wavelet stage: 8-bit samples at 16 kHz.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AudioClip8 {
    pub samples: Vec<i8>,
}

/// Noise environment. The first four are the DEMAND categories used for
/// evaluation; the rest are generated locally.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Environment {
    Dwashing,
    Nfield,
    Ooffice,
    Tcar,
    Synthetic(SyntheticNoise),
}

impl Environment {
    pub const DEMAND: [Environment; 4] = [
        Environment::Dwashing,
        Environment::Nfield,
        Environment::Ooffice,
        Environment::Tcar,
    ];

    pub fn is_demand(self) -> bool {
        !matches!(self, Environment::Synthetic(_))
    }
}

impl fmt::Display for Environment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Environment::Dwashing => f.write_str("DWASHING"),
            Environment::Nfield => f.write_str("NFIELD"),
            Environment::Ooffice => f.write_str("OOFFICE"),
            Environment::Tcar => f.write_str("TCAR"),
            Environment::Synthetic(kind) => write!(f, "SYN_{}", kind.name().to_ascii_uppercase()),
        }
    }
}

impl FromStr for Environment {
    type Err = KwsError;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.trim().to_ascii_uppercase();
        match upper.as_str() {
            "DWASHING" => Ok(Environment::Dwashing),
            "NFIELD" => Ok(Environment::Nfield),
            "OOFFICE" => Ok(Environment::Ooffice),
            "TCAR" => Ok(Environment::Tcar),
            other => {
                let kind = other.strip_prefix("SYN_").unwrap_or(other);
                SyntheticNoise::ALL
                    .iter()
                    .find(|k| k.name().eq_ignore_ascii_case(kind))
                    .map(|&k| Environment::Synthetic(k))
                    .ok_or_else(|| KwsError::Usage(format!("unknown environment '{s}'")))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseRecording {
    pub samples: Vec<i16>,
    pub environment: Environment,
}

impl NoiseRecording {
    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / SAMPLE_RATE as f64
    }

    /// Segment of `len` samples starting at `offset`.
    pub fn segment(&self, offset: usize, len: usize) -> Result<&[i16]> {
        self.samples.get(offset..offset + len).ok_or_else(|| {
            KwsError::Shape(format!(
                "noise segment [{offset}, {}) outside recording of {} samples",
                offset + len,
                self.samples.len()
            ))
        })
    }

    /// Seeded uniform offset such that a full `len`-sample segment exists.
    pub fn random_offset(&self, len: usize, rng: &mut impl Rng) -> Result<usize> {
        if self.samples.len() < len {
            return Err(KwsError::Shape(format!(
                "noise recording of {} samples shorter than segment {len}",
                self.samples.len()
            )));
        }
        Ok(rng.random_range(0..=self.samples.len() - len))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixSpec {
    pub snr_db: f64,
    pub noise_offset_s: f64,
    pub seed: u64,
}

impl MixSpec {
    /// Draws the noise offset uniformly from the recording using `seed`.
    pub fn random(snr_db: f64, noise: &NoiseRecording, clip_len: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let offset = noise.random_offset(clip_len, &mut rng)?;
        Ok(MixSpec {
            snr_db,
            noise_offset_s: offset as f64 / SAMPLE_RATE as f64,
            seed,
        })
    }

    pub fn offset_samples(&self) -> usize {
        (self.noise_offset_s * SAMPLE_RATE as f64).round().max(0.0) as usize
    }
}

pub fn mean_power(samples: &[i16]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().map(|&s| (s as f64) * (s as f64)).sum::<f64>() / samples.len() as f64
}

/// Noise gain that places `p_noise` at `snr_db` below `p_clean`.
pub fn mix_gain(p_clean: f64, p_noise: f64, snr_db: f64) -> f64 {
    (p_clean / (p_noise * 10f64.powf(snr_db / 10.0))).sqrt()
}

pub fn saturate_i16(x: f64) -> i16 {
    x.round().clamp(i16::MIN as f64, i16::MAX as f64) as i16
}

/// Adds a noise segment to `clean` at the requested SNR, saturating to 16 bits.
pub fn mix_at_snr(clean: &AudioClip, noise: &NoiseRecording, spec: &MixSpec) -> Result<AudioClip> {
    let p_clean = clean.power();
    if p_clean <= 0.0 {
        return Err(KwsError::DegenerateMix("clean clip has zero power".into()));
    }
    let segment = noise.segment(spec.offset_samples(), clean.len())?;
    let p_noise = mean_power(segment);
    if p_noise <= 0.0 {
        return Err(KwsError::DegenerateMix("noise segment has zero power".into()));
    }
    let g = mix_gain(p_clean, p_noise, spec.snr_db);
    let samples = clean
        .samples()
        .iter()
        .zip(segment)
        .map(|(&c, &n)| saturate_i16(c as f64 + g * n as f64))
        .collect();
    Ok(AudioClip {
        samples,
        label: clean.label,
    })
}

/// Noise-only input: a segment rescaled to mean power `target_power`.
pub fn noise_at_power(noise: &NoiseRecording, offset: usize, len: usize, target_power: f64) -> Result<AudioClip> {
    let segment = noise.segment(offset, len)?;
    let p = mean_power(segment);
    if p <= 0.0 {
        return Err(KwsError::DegenerateMix("noise segment has zero power".into()));
    }
    let g = (target_power / p).sqrt();
    Ok(AudioClip {
        samples: segment.iter().map(|&n| saturate_i16(g * n as f64)).collect(),
        label: Some(ClipLabel::NoiseOnly),
    })
}
