//! 20×16 LogMel and MFCC maps from a one-second 8-bit clip. Sixteen
//! non-overlapping 1024-sample frames, Hann window, 20 triangular mel
//! filters over 0–8 kHz, natural log with a 1e-6 floor, orthonormal DCT-II.
//!
//! MFCC is always derived from the emitted (f32) LogMel values, so the two
//! maps of a pair are consistent bit for bit.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::audio::{AudioClip8, SAMPLE_RATE};
use crate::error::{KwsError, Result};
use crate::Class;

pub const N_BANDS: usize = 20;
pub const N_FRAMES: usize = 16;
pub const FFT_SIZE: usize = 1024;
pub const N_BINS: usize = FFT_SIZE / 2 + 1;
pub const MAP_LEN: usize = N_BANDS * N_FRAMES;
pub const PADDED_LEN: usize = FFT_SIZE * N_FRAMES;
pub const LOG_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureKind {
    Mfcc = 0,
    LogMel = 1,
}

impl FeatureKind {
    fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(FeatureKind::Mfcc),
            1 => Ok(FeatureKind::LogMel),
            t => Err(KwsError::Checkpoint(format!("unknown feature kind tag {t}"))),
        }
    }
}

/// Row-major 20×16 map: row = band/coefficient, column = frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub kind: FeatureKind,
    pub values: [f32; MAP_LEN],
}

impl FeatureMap {
    pub fn zeros(kind: FeatureKind) -> Self {
        FeatureMap {
            kind,
            values: [0.0; MAP_LEN],
        }
    }

    pub fn get(&self, band: usize, frame: usize) -> f32 {
        self.values[band * N_FRAMES + frame]
    }

    pub fn set(&mut self, band: usize, frame: usize, v: f32) {
        self.values[band * N_FRAMES + frame] = v;
    }

    pub fn column(&self, frame: usize) -> [f32; N_BANDS] {
        std::array::from_fn(|b| self.get(b, frame))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Record layout: kind tag (u8) followed by 320 little-endian f32.
    pub fn write_to(&self, w: &mut impl Write) -> std::io::Result<()> {
        w.write_all(&[self.kind as u8])?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let mut tag = [0u8; 1];
        read_exact(r, &mut tag)?;
        let kind = FeatureKind::from_tag(tag[0])?;
        let mut buf = [0u8; MAP_LEN * 4];
        read_exact(r, &mut buf)?;
        let mut values = [0.0f32; MAP_LEN];
        for (v, b) in values.iter_mut().zip(buf.chunks_exact(4)) {
            *v = f32::from_le_bytes([b[0], b[1], b[2], b[3]]);
        }
        Ok(FeatureMap { kind, values })
    }
}

fn read_exact(r: &mut impl Read, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf)
        .map_err(|e| KwsError::Checkpoint(format!("truncated record: {e}")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    Runtime = 0,
    Rehearsal = 1,
    Augmented = 2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeaturePair {
    pub mfcc: FeatureMap,
    pub logmel: FeatureMap,
    pub label: Option<Class>,
    pub provenance: Provenance,
}

impl FeaturePair {
    /// Pair record: label (u8, 0xFF = none), provenance (u8), MFCC record,
    /// LogMel record.
    pub fn write_to(&self, w: &mut impl Write) -> std::io::Result<()> {
        let label = self.label.map_or(0xFF, |c| c.index() as u8);
        w.write_all(&[label, self.provenance as u8])?;
        self.mfcc.write_to(w)?;
        self.logmel.write_to(w)
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let mut head = [0u8; 2];
        read_exact(r, &mut head)?;
        let label = match head[0] {
            0xFF => None,
            i => Some(Class::from_index(i as usize).ok_or_else(|| KwsError::Checkpoint(format!("bad class tag {i}")))?),
        };
        let provenance = match head[1] {
            0 => Provenance::Runtime,
            1 => Provenance::Rehearsal,
            2 => Provenance::Augmented,
            p => return Err(KwsError::Checkpoint(format!("bad provenance tag {p}"))),
        };
        let mfcc = FeatureMap::read_from(r)?;
        let logmel = FeatureMap::read_from(r)?;
        if mfcc.kind != FeatureKind::Mfcc || logmel.kind != FeatureKind::LogMel {
            return Err(KwsError::Checkpoint("pair record maps out of order".into()));
        }
        Ok(FeaturePair {
            mfcc,
            logmel,
            label,
            provenance,
        })
    }
}

fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filters on the HTK mel scale with unit peak.
#[derive(Debug, Clone)]
pub struct MelFilterbank {
    /// Per filter: first bin and weights from that bin on.
    pub triangles: Vec<(usize, Vec<f64>)>,
    pub centers_hz: Vec<f64>,
    pub f_low: f64,
    pub f_high: f64,
}

impl MelFilterbank {
    pub fn new(n_filters: usize, fft_size: usize, sample_rate: f64, f_low: f64, f_high: f64) -> Self {
        let (m_lo, m_hi) = (hz_to_mel(f_low), hz_to_mel(f_high));
        let edges: Vec<f64> = (0..n_filters + 2)
            .map(|i| mel_to_hz(m_lo + (m_hi - m_lo) * i as f64 / (n_filters + 1) as f64))
            .collect();
        let bin_hz = sample_rate / fft_size as f64;
        let n_bins = fft_size / 2 + 1;
        let triangles = (0..n_filters)
            .map(|m| {
                let (left, center, right) = (edges[m], edges[m + 1], edges[m + 2]);
                let weights: Vec<(usize, f64)> = (0..n_bins)
                    .filter_map(|k| {
                        let f = k as f64 * bin_hz;
                        let w = if f > left && f <= center {
                            (f - left) / (center - left)
                        } else if f > center && f < right {
                            (right - f) / (right - center)
                        } else {
                            0.0
                        };
                        (w > 0.0).then_some((k, w))
                    })
                    .collect();
                let start = weights.first().map_or(0, |&(k, _)| k);
                let end = weights.last().map_or(0, |&(k, _)| k + 1);
                let mut dense = vec![0.0; end.saturating_sub(start)];
                for (k, w) in weights {
                    dense[k - start] = w;
                }
                (start, dense)
            })
            .collect();
        MelFilterbank {
            triangles,
            centers_hz: edges[1..=n_filters].to_vec(),
            f_low,
            f_high,
        }
    }

    pub fn n_filters(&self) -> usize {
        self.triangles.len()
    }

    pub fn apply(&self, power: &[f64]) -> Vec<f64> {
        self.triangles
            .iter()
            .map(|(start, w)| w.iter().zip(&power[*start..]).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Orthonormal DCT-II.
pub fn dct_ii(x: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    (0..x.len())
        .map(|k| {
            let scale = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
            scale
                * x.iter()
                    .enumerate()
                    .map(|(i, &v)| v * (PI / n * (i as f64 + 0.5) * k as f64).cos())
                    .sum::<f64>()
        })
        .collect()
}

/// Inverse of [`dct_ii`] (orthonormal DCT-III).
pub fn dct_iii(c: &[f64]) -> Vec<f64> {
    let n = c.len() as f64;
    (0..c.len())
        .map(|i| {
            c.iter()
                .enumerate()
                .map(|(k, &v)| {
                    let scale = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
                    scale * v * (PI / n * (i as f64 + 0.5) * k as f64).cos()
                })
                .sum()
        })
        .collect()
}

pub fn mfcc_frame(logmel: &[f64]) -> Result<Vec<f64>> {
    if logmel.len() != N_BANDS || logmel.iter().any(|v| !v.is_finite()) {
        return Err(KwsError::Shape(format!("MFCC needs {N_BANDS} finite log-energies")));
    }
    Ok(dct_ii(logmel))
}

/// MFCC map recomputed column by column from a LogMel map.
pub fn mfcc_from_logmel(logmel: &FeatureMap) -> FeatureMap {
    let mut out = FeatureMap::zeros(FeatureKind::Mfcc);
    for frame in 0..N_FRAMES {
        let col: Vec<f64> = logmel.column(frame).iter().map(|&v| v as f64).collect();
        for (band, c) in dct_ii(&col).into_iter().enumerate() {
            out.set(band, frame, c as f32);
        }
    }
    out
}

pub fn frame_clip(clip: &AudioClip8) -> Result<Vec<Vec<f64>>> {
    if clip.samples.len() > PADDED_LEN {
        return Err(KwsError::Shape(format!(
            "clip of {} samples exceeds {PADDED_LEN}",
            clip.samples.len()
        )));
    }
    let mut padded: Vec<f64> = clip.samples.iter().map(|&s| s as f64).collect();
    padded.resize(PADDED_LEN, 0.0);
    Ok(padded.chunks_exact(FFT_SIZE).map(<[f64]>::to_vec).collect())
}

/// Shared, read-only extraction state.
#[derive(Clone)]
pub struct FeatureExtractor {
    fft: Arc<dyn Fft<f64>>,
    window: Vec<f64>,
    filterbank: MelFilterbank,
}

impl std::fmt::Debug for FeatureExtractor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FeatureExtractor")
            .field("filterbank", &self.filterbank)
            .finish_non_exhaustive()
    }
}

impl Default for FeatureExtractor {
    fn default() -> Self {
        Self::new()
    }
}

impl FeatureExtractor {
    pub fn new() -> Self {
        let fft = FftPlanner::new().plan_fft_forward(FFT_SIZE);
        // Periodic Hann.
        let window = (0..FFT_SIZE)
            .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / FFT_SIZE as f64).cos())
            .collect();
        let filterbank = MelFilterbank::new(N_BANDS, FFT_SIZE, SAMPLE_RATE as f64, 0.0, SAMPLE_RATE as f64 / 2.0);
        FeatureExtractor {
            fft,
            window,
            filterbank,
        }
    }

    pub fn filterbank(&self) -> &MelFilterbank {
        &self.filterbank
    }

    pub fn power_spectrum(&self, frame: &[f64]) -> Result<Vec<f64>> {
        if frame.len() != FFT_SIZE {
            return Err(KwsError::Shape(format!(
                "analysis frame must hold {FFT_SIZE} samples, got {}",
                frame.len()
            )));
        }
        let mut buf: Vec<Complex<f64>> = frame
            .iter()
            .zip(&self.window)
            .map(|(&x, &w)| Complex::new(x * w, 0.0))
            .collect();
        self.fft.process(&mut buf);
        Ok(buf[..N_BINS].iter().map(|c| c.norm_sqr()).collect())
    }

    pub fn logmel_frame(&self, frame: &[f64]) -> Result<Vec<f64>> {
        let power = self.power_spectrum(frame)?;
        Ok(self
            .filterbank
            .apply(&power)
            .into_iter()
            .map(|e| (e + LOG_FLOOR).ln())
            .collect())
    }

    pub fn logmel_map(&self, clip: &AudioClip8) -> Result<FeatureMap> {
        let mut map = FeatureMap::zeros(FeatureKind::LogMel);
        for (t, frame) in frame_clip(clip)?.iter().enumerate() {
            for (band, v) in self.logmel_frame(frame)?.into_iter().enumerate() {
                map.set(band, t, v as f32);
            }
        }
        Ok(map)
    }

    pub fn extract_pair(&self, clip: &AudioClip8) -> Result<FeaturePair> {
        let logmel = self.logmel_map(clip)?;
        let mfcc = mfcc_from_logmel(&logmel);
        Ok(FeaturePair {
            mfcc,
            logmel,
            label: None,
            provenance: Provenance::Runtime,
        })
    }
}
