use std::f64::consts::PI;
use std::path::Path;

use super::{saturate_i16, AudioClip, Environment, NoiseRecording, SAMPLE_RATE};
use crate::error::{KwsError, Result};

/// Zero crossings of the sinc kernel kept on each side of the output point.
const SINC_HALF_ZEROS: f64 = 16.0;

/// Reads a PCM16 WAV file, averages its channels and resamples to 16 kHz.
pub fn read_wav_mono_16k(path: &Path) -> Result<Vec<i16>> {
    let mut reader = hound::WavReader::open(path)?;
    let spec = reader.spec();
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(KwsError::Unsupported(format!(
            "{}: {:?} {}-bit samples (only PCM16 is supported)",
            path.display(),
            spec.sample_format,
            spec.bits_per_sample
        )));
    }
    if spec.channels == 0 {
        return Err(KwsError::Format(format!("{}: zero channels", path.display())));
    }
    let channels = spec.channels as usize;
    let interleaved = reader.samples::<i16>().collect::<std::result::Result<Vec<_>, _>>()?;
    let mono: Vec<f64> = interleaved
        .chunks_exact(channels)
        .map(|frame| frame.iter().map(|&s| s as f64).sum::<f64>() / channels as f64)
        .collect();
    let resampled = resample(&mono, spec.sample_rate, SAMPLE_RATE);
    Ok(resampled.into_iter().map(saturate_i16).collect())
}

/// Loads an unlabeled clip; callers attach labels (which fixes the length).
pub fn load_wav(path: &Path) -> Result<AudioClip> {
    read_wav_mono_16k(path).map(AudioClip::unlabeled)
}

pub fn load_noise_recording(path: &Path, environment: Environment) -> Result<NoiseRecording> {
    Ok(NoiseRecording {
        samples: read_wav_mono_16k(path)?,
        environment,
    })
}

pub fn write_wav(path: &Path, samples: &[i16], sample_rate: u32, channels: u16) -> Result<()> {
    let spec = hound::WavSpec {
        channels,
        sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec)?;
    for &s in samples {
        writer.write_sample(s)?;
    }
    writer.finalize()?;
    Ok(())
}

/// Band-limited resampling with a Blackman-windowed sinc kernel. The cutoff
/// sits at the lower of the two Nyquist frequencies, so decimation is
/// anti-aliased. Output length is `round(len * to / from)`.
pub fn resample(input: &[f64], from: u32, to: u32) -> Vec<f64> {
    if from == to || input.is_empty() {
        return input.to_vec();
    }
    let ratio = to as f64 / from as f64;
    let out_len = (input.len() as f64 * ratio).round() as usize;
    let cutoff = ratio.min(1.0);
    let half_width = SINC_HALF_ZEROS / cutoff;
    let step = from as f64 / to as f64;

    (0..out_len)
        .map(|m| {
            let t = m as f64 * step;
            let lo = (t - half_width).ceil().max(0.0) as usize;
            let hi = ((t + half_width).floor() as usize).min(input.len() - 1);
            let mut acc = 0.0;
            let mut norm = 0.0;
            for (k, &x) in input.iter().enumerate().take(hi + 1).skip(lo) {
                let d = t - k as f64;
                let w = cutoff * sinc(cutoff * d) * blackman(d / half_width);
                acc += w * x;
                norm += w;
            }
            // Renormalise so DC passes with unit gain near the edges.
            if norm.abs() > 1e-12 {
                acc / norm
            } else {
                0.0
            }
        })
        .collect()
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Blackman window on [-1, 1].
fn blackman(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        return 0.0;
    }
    let x = (u + 1.0) / 2.0;
    0.42 - 0.5 * (2.0 * PI * x).cos() + 0.08 * (4.0 * PI * x).cos()
}
