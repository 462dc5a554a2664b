//! Feature-domain denoising: min-max normalisation, mean subtraction along
//! the frame and band axes, binary "above mean" masks and α-weighted
//! recombination
//!
//! `x_d = (1 - α)(α·x_s·M_s + (1 - α)·x_t·M_t) + α·x_n`
//!
//! where `x_t` has each frame's (column's) mean removed and `x_s` each
//! band's (row's) mean removed.

use crate::error::{KwsError, Result};
use crate::features::{FeatureMap, FeaturePair, N_BANDS, N_FRAMES};

pub const DEFAULT_ALPHA: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenoiseConfig {
    alpha: f64,
}

impl DenoiseConfig {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(KwsError::Usage(format!("alpha {alpha} outside [0, 1]")));
        }
        Ok(DenoiseConfig { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

impl Default for DenoiseConfig {
    fn default() -> Self {
        DenoiseConfig { alpha: DEFAULT_ALPHA }
    }
}

/// Binary masks, stored as 0.0 / 1.0.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskPair {
    pub temporal: Vec<f32>,
    pub spectral: Vec<f32>,
}

/// Scales to [0, 1]; a constant map becomes all zeros.
pub fn normalize01(map: &FeatureMap) -> FeatureMap {
    let (lo, hi) = map
        .values
        .iter()
        .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let mut out = map.clone();
    let range = hi - lo;
    for v in out.values.iter_mut() {
        *v = if range > 0.0 { (*v - lo) / range } else { 0.0 };
    }
    out
}

fn frame_means(values: &[f32]) -> [f32; N_FRAMES] {
    std::array::from_fn(|t| {
        ((0..N_BANDS).map(|b| values[b * N_FRAMES + t] as f64).sum::<f64>() / N_BANDS as f64) as f32
    })
}

fn band_means(values: &[f32]) -> [f32; N_BANDS] {
    std::array::from_fn(|b| {
        (values[b * N_FRAMES..(b + 1) * N_FRAMES]
            .iter()
            .map(|&v| v as f64)
            .sum::<f64>()
            / N_FRAMES as f64) as f32
    })
}

/// Returns `(x_t, x_s)`: per-frame and per-band means removed.
#[allow(clippy::needless_range_loop)]
pub fn mean_subtract(xn: &FeatureMap) -> (FeatureMap, FeatureMap) {
    let mu_t = frame_means(&xn.values);
    let mu_f = band_means(&xn.values);
    let mut xt = xn.clone();
    let mut xs = xn.clone();
    for b in 0..N_BANDS {
        for t in 0..N_FRAMES {
            let i = b * N_FRAMES + t;
            xt.values[i] = xn.values[i] - mu_t[t];
            xs.values[i] = xn.values[i] - mu_f[b];
        }
    }
    (xt, xs)
}

/// Strict `>` against the per-frame mean of `x_t` and per-band mean of `x_s`.
#[allow(clippy::needless_range_loop)]
pub fn build_masks(xt: &FeatureMap, xs: &FeatureMap) -> MaskPair {
    let mu_t = frame_means(&xt.values);
    let mu_f = band_means(&xs.values);
    let mut temporal = vec![0.0; xt.values.len()];
    let mut spectral = vec![0.0; xs.values.len()];
    for b in 0..N_BANDS {
        for t in 0..N_FRAMES {
            let i = b * N_FRAMES + t;
            temporal[i] = if xt.values[i] > mu_t[t] { 1.0 } else { 0.0 };
            spectral[i] = if xs.values[i] > mu_f[b] { 1.0 } else { 0.0 };
        }
    }
    MaskPair { temporal, spectral }
}

pub fn recombine(
    xn: &FeatureMap,
    xt: &FeatureMap,
    xs: &FeatureMap,
    masks: &MaskPair,
    cfg: &DenoiseConfig,
) -> FeatureMap {
    let a = cfg.alpha as f32;
    let mut out = xn.clone();
    for (i, v) in out.values.iter_mut().enumerate() {
        let inner = a * xs.values[i] * masks.spectral[i] + (1.0 - a) * xt.values[i] * masks.temporal[i];
        *v = (1.0 - a) * inner + a * xn.values[i];
    }
    out
}

pub fn denoise_map(map: &FeatureMap, cfg: &DenoiseConfig) -> FeatureMap {
    let xn = normalize01(map);
    let (xt, xs) = mean_subtract(&xn);
    let masks = build_masks(&xt, &xs);
    recombine(&xn, &xt, &xs, &masks, cfg)
}

pub fn denoise_pair(pair: &FeaturePair, cfg: &DenoiseConfig) -> FeaturePair {
    FeaturePair {
        mfcc: denoise_map(&pair.mfcc, cfg),
        logmel: denoise_map(&pair.logmel, cfg),
        label: pair.label,
        provenance: pair.provenance,
    }
}

/// Normalisation only; used when spectral denoising is switched off.
pub fn normalize_pair(pair: &FeaturePair) -> FeaturePair {
    FeaturePair {
        mfcc: normalize01(&pair.mfcc),
        logmel: normalize01(&pair.logmel),
        label: pair.label,
        provenance: pair.provenance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{FeatureKind, MAP_LEN};

    fn map_from(f: impl Fn(usize, usize) -> f32) -> FeatureMap {
        let mut m = FeatureMap::zeros(FeatureKind::LogMel);
        for b in 0..N_BANDS {
            for t in 0..N_FRAMES {
                m.set(b, t, f(b, t));
            }
        }
        m
    }

    #[test]
    fn normalize_affine_and_degenerate() {
        let mut m = map_from(|_, _| 6.0);
        m.values[0] = 2.0;
        m.values[1] = 10.0;
        let n = normalize01(&m);
        assert_eq!(n.values[2], 0.5);
        assert_eq!(n.values[0], 0.0);
        assert_eq!(n.values[1], 1.0);
        assert!(normalize01(&map_from(|_, _| 3.0)).values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_map_centres_to_zero() {
        let (xt, xs) = mean_subtract(&map_from(|_, _| 0.7));
        assert!(xt.values.iter().chain(&xs.values).all(|&v| v.abs() < 1e-7));
    }

    #[test]
    fn single_hot_column_is_removed_from_xt() {
        let xn = map_from(|_, t| if t == 4 { 1.0 } else { 0.0 });
        let (xt, _) = mean_subtract(&xn);
        assert!((0..N_BANDS).all(|b| xt.get(b, 4) == 0.0));
    }

    #[test]
    fn zero_xt_gives_empty_mask() {
        let z = FeatureMap::zeros(FeatureKind::Mfcc);
        let masks = build_masks(&z, &z);
        assert!(masks.temporal.iter().chain(&masks.spectral).all(|&m| m == 0.0));
    }

    #[test]
    fn mask_marks_entries_above_frame_mean() {
        // Frame values alternate -1 / 3: mean 1, so the 3s are kept.
        let xt = map_from(|b, _| if b % 2 == 0 { -1.0 } else { 3.0 });
        let masks = build_masks(&xt, &xt);
        for b in 0..N_BANDS {
            for t in 0..N_FRAMES {
                let expect = if b % 2 == 0 { 0.0 } else { 1.0 };
                assert_eq!(masks.temporal[b * N_FRAMES + t], expect);
            }
        }
    }

    #[test]
    fn recombine_closed_forms() {
        let xn = map_from(|b, t| ((b * 7 + t * 3) % 11) as f32 / 10.0);
        let (xt, xs) = mean_subtract(&xn);
        let masks = build_masks(&xt, &xs);

        let one = recombine(&xn, &xt, &xs, &masks, &DenoiseConfig::new(1.0).unwrap());
        assert_eq!(one.values, xn.values);

        let zero = recombine(&xn, &xt, &xs, &masks, &DenoiseConfig::new(0.0).unwrap());
        for i in 0..MAP_LEN {
            assert_eq!(zero.values[i], xt.values[i] * masks.temporal[i]);
        }

        let ones = map_from(|_, _| 1.0);
        let full = MaskPair {
            temporal: vec![1.0; MAP_LEN],
            spectral: vec![1.0; MAP_LEN],
        };
        let half = recombine(&ones, &ones, &ones, &full, &DenoiseConfig::new(0.5).unwrap());
        assert!(half.values.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn alpha_out_of_range_rejected() {
        assert!(DenoiseConfig::new(-0.1).is_err());
        assert!(DenoiseConfig::new(1.01).is_err());
        assert_eq!(DenoiseConfig::default().alpha(), 0.5);
    }
}
