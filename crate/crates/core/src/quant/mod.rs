//! INT8 deployment form of the classifier: per-tensor symmetric weights,
//! per-site affine activations from min/max calibration, int32 biases and
//! accumulators, fixed-point requantisation, and a sigmoid lookup table.
//! After the input maps are quantised no floating-point value takes part
//! in producing the class, confidence or latent outputs.

mod calibrate;
mod checkpoint;
mod model;

pub use calibrate::{calibrate, Calibration, MIN_CALIBRATION_SAMPLES};
pub use checkpoint::{load_quantized, read_quantized, save_quantized, write_quantized, QUANT_MAGIC};
pub use model::{
    dequantize_model, fake_quantize_weights, quantize_model, QConv, QPath, QuantizedModel, QuantizedOutput,
};

/// Smallest scale produced for a degenerate (zero-width) range.
pub const MIN_SCALE: f32 = 1e-6;
/// Confidence threshold on the integer grid matching 85%: ceil(0.85 · 255).
pub const DEFAULT_CONFIDENCE_Q: u8 = 217;

pub fn confidence_to_q(p: f64) -> u8 {
    (p * 255.0).ceil().clamp(0.0, 255.0) as u8
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantParams {
    pub scale: f32,
    pub zero_point: i32,
}

impl QuantParams {
    /// Affine INT8 parameters covering `[min, max]` widened to include 0.
    pub fn from_range(min: f32, max: f32) -> Self {
        let lo = min.min(0.0);
        let hi = max.max(0.0);
        let scale = ((hi - lo) / 255.0).max(MIN_SCALE);
        let zero_point = (-128.0 - lo / scale).round().clamp(-128.0, 127.0) as i32;
        QuantParams { scale, zero_point }
    }

    /// Symmetric weight parameters: zero point 0, `max_abs` maps to 127.
    pub fn symmetric(max_abs: f32) -> Self {
        QuantParams {
            scale: (max_abs / 127.0).max(MIN_SCALE),
            zero_point: 0,
        }
    }

    /// Output site of the sigmoid: [0, 1) on a 1/256 grid.
    pub fn probability() -> Self {
        QuantParams {
            scale: 1.0 / 256.0,
            zero_point: -128,
        }
    }

    pub fn quantize(&self, x: f32) -> i8 {
        ((x / self.scale).round() as i64 + self.zero_point as i64).clamp(-128, 127) as i8
    }

    pub fn quantize_symmetric(&self, x: f32) -> i8 {
        (x / self.scale).round().clamp(-127.0, 127.0) as i8
    }

    pub fn dequantize(&self, q: i32) -> f32 {
        (q - self.zero_point) as f32 * self.scale
    }
}

/// Real multiplier in (0, ∞) as a Q31 mantissa and a power-of-two exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixedMultiplier {
    pub mantissa: i32,
    pub exponent: i32,
}

impl FixedMultiplier {
    pub fn new(real: f64) -> Self {
        if real <= 0.0 || !real.is_finite() {
            return FixedMultiplier {
                mantissa: 0,
                exponent: 0,
            };
        }
        let mut exponent = real.log2().floor() as i32 + 1;
        let mut m = (real / 2f64.powi(exponent) * (1u64 << 31) as f64).round() as i64;
        if m == 1 << 31 {
            m /= 2;
            exponent += 1;
        }
        FixedMultiplier {
            mantissa: m as i32,
            exponent,
        }
    }

    /// `round(x · mantissa · 2^(exponent - 31))`, ties away from zero.
    pub fn apply(&self, x: i32) -> i32 {
        let prod = x as i128 * self.mantissa as i128;
        let shift = 31 - self.exponent;
        let out = if shift <= 0 {
            prod << (-shift).min(64)
        } else if shift >= 126 {
            0
        } else {
            let half = 1i128 << (shift - 1);
            if prod >= 0 {
                (prod + half) >> shift
            } else {
                -((-prod + half) >> shift)
            }
        };
        out.clamp(i32::MIN as i128, i32::MAX as i128) as i32
    }
}
