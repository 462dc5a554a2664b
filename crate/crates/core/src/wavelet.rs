//! Waveform denoising: framed single-level Haar decomposition, per-frame
//! MAD noise estimate, universal (VisuShrink) threshold and soft shrinkage
//! of the detail band, followed by reduction to 8-bit samples.

use std::f64::consts::SQRT_2;

use crate::audio::{AudioClip, AudioClip8};
use crate::error::{KwsError, Result};

pub const FRAME_LEN: usize = 1024;
/// Gaussian consistency constant for the MAD estimator.
pub const MAD_NORMALIZER: f64 = 0.6745;
/// 16-bit to 8-bit scale.
const OUTPUT_DIVISOR: f64 = 256.0;

#[derive(Debug, Clone, PartialEq)]
pub struct WaveletFrame {
    pub approx: Vec<f64>,
    pub detail: Vec<f64>,
}

impl WaveletFrame {
    pub fn frame_len(&self) -> usize {
        self.approx.len() * 2
    }

    pub fn reconstruct(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.frame_len());
        for (&a, &d) in self.approx.iter().zip(&self.detail) {
            out.push((a + d) / SQRT_2);
            out.push((a - d) / SQRT_2);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenoiseParams {
    pub mad: f64,
    pub tau: f64,
}

impl DenoiseParams {
    pub fn from_detail(detail: &[f64], n: usize) -> Result<Self> {
        let mad = mad_sigma(detail)?;
        Ok(DenoiseParams {
            mad,
            tau: universal_threshold(mad, n),
        })
    }
}

pub fn haar_decompose(frame: &[f64]) -> Result<WaveletFrame> {
    if frame.len() != FRAME_LEN {
        return Err(KwsError::Shape(format!(
            "wavelet frame must hold {FRAME_LEN} samples, got {}",
            frame.len()
        )));
    }
    Ok(haar_pairs(frame))
}

fn haar_pairs(frame: &[f64]) -> WaveletFrame {
    let (approx, detail) = frame
        .chunks_exact(2)
        .map(|p| ((p[0] + p[1]) / SQRT_2, (p[0] - p[1]) / SQRT_2))
        .unzip();
    WaveletFrame { approx, detail }
}

/// Median with even lengths resolved to the midpoint of the central pair.
fn median(values: &mut [f64]) -> f64 {
    let n = values.len();
    let (below, upper, _) = values.select_nth_unstable_by(n / 2, |a, b| a.total_cmp(b));
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        // The lower central value is the maximum of the left partition.
        let lower = below.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

/// `median(|d - median(d)|) / 0.6745`.
pub fn mad_sigma(detail: &[f64]) -> Result<f64> {
    if detail.is_empty() {
        return Err(KwsError::Shape("MAD of an empty coefficient set".into()));
    }
    let mut buf = detail.to_vec();
    let center = median(&mut buf);
    for (b, &d) in buf.iter_mut().zip(detail) {
        *b = (d - center).abs();
    }
    Ok(median(&mut buf) / MAD_NORMALIZER)
}

/// `mad * sqrt(2 ln n)`.
pub fn universal_threshold(mad: f64, n: usize) -> f64 {
    mad * (2.0 * (n as f64).ln()).sqrt()
}

pub fn soft_threshold(coeffs: &[f64], tau: f64) -> Vec<f64> {
    coeffs.iter().map(|&c| c.signum() * (c.abs() - tau).max(0.0)).collect()
}

/// Per-frame record of the threshold applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameTrace {
    pub frame: usize,
    pub params: DenoiseParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdMode {
    Universal,
    /// Skip shrinkage (τ = 0); the transform still runs.
    Disabled,
}

/// Denoises at the original 16-bit scale, before 8-bit reduction. The last
/// partial frame is zero-padded and the result trimmed back.
pub fn denoise_samples(samples: &[f64], mode: ThresholdMode) -> (Vec<f64>, Vec<FrameTrace>) {
    let mut out = Vec::with_capacity(samples.len());
    let mut traces = Vec::with_capacity(samples.len().div_ceil(FRAME_LEN));
    let mut frame = vec![0.0; FRAME_LEN];
    for (index, chunk) in samples.chunks(FRAME_LEN).enumerate() {
        frame[..chunk.len()].copy_from_slice(chunk);
        frame[chunk.len()..].fill(0.0);
        let mut coeffs = haar_pairs(&frame);
        let params = match mode {
            ThresholdMode::Universal => {
                DenoiseParams::from_detail(&coeffs.detail, FRAME_LEN).expect("nonempty detail band")
            }
            ThresholdMode::Disabled => DenoiseParams { mad: 0.0, tau: 0.0 },
        };
        if params.tau > 0.0 {
            coeffs.detail = soft_threshold(&coeffs.detail, params.tau);
        }
        out.extend_from_slice(&coeffs.reconstruct()[..chunk.len()]);
        traces.push(FrameTrace { frame: index, params });
    }
    (out, traces)
}

/// Round-half-away-from-zero of `x / 256`, saturated to the 8-bit range.
pub fn to_i8(x: f64) -> i8 {
    (x / OUTPUT_DIVISOR).round().clamp(-128.0, 127.0) as i8
}

pub fn denoise_clip(clip: &AudioClip) -> AudioClip8 {
    denoise_clip_traced(clip, ThresholdMode::Universal).0
}

pub fn denoise_clip_traced(clip: &AudioClip, mode: ThresholdMode) -> (AudioClip8, Vec<FrameTrace>) {
    let input: Vec<f64> = clip.samples().iter().map(|&s| s as f64).collect();
    let (out, traces) = denoise_samples(&input, mode);
    (
        AudioClip8 {
            samples: out.into_iter().map(to_i8).collect(),
        },
        traces,
    )
}

/// 8-bit reduction without denoising (wavelet stage switched off).
pub fn quantize_clip(clip: &AudioClip) -> AudioClip8 {
    AudioClip8 {
        samples: clip.samples().iter().map(|&s| to_i8(s as f64)).collect(),
    }
}
