use super::{Calibration, FixedMultiplier, QuantParams};
use crate::class::Class;
use crate::error::{KwsError, Result};
use crate::features::{FeaturePair, N_BANDS, N_FRAMES};
use crate::nn::{sigmoid, Architecture, ConvSpec, KwsModel, Tensor, KERNEL};

/// One INT8 convolution: symmetric weights, int32 bias on the
/// `s_in · s_w` grid, requantised to the output site.
#[derive(Debug, Clone, PartialEq)]
pub struct QConv {
    pub spec: ConvSpec,
    pub weight: Vec<i8>,
    pub weight_params: QuantParams,
    pub bias: Vec<i32>,
    pub input: QuantParams,
    pub output: QuantParams,
    pub requant: FixedMultiplier,
}

impl QConv {
    fn new(
        spec: ConvSpec,
        weight: Vec<i8>,
        weight_params: QuantParams,
        bias: Vec<i32>,
        input: QuantParams,
        output: QuantParams,
    ) -> Self {
        let real = input.scale as f64 * weight_params.scale as f64 / output.scale as f64;
        QConv {
            spec,
            weight,
            weight_params,
            bias,
            input,
            output,
            requant: FixedMultiplier::new(real),
        }
    }

    pub fn bias_scale(&self) -> f32 {
        self.input.scale * self.weight_params.scale
    }

    /// Integer valid convolution over `[C_in, h, w]`, ReLU folded into the
    /// output clamp.
    fn forward(&self, x: &[i8], h: usize, w: usize) -> (Vec<i8>, usize, usize) {
        let c_in = self.spec.in_channels;
        let c_out = self.spec.out_channels;
        let (ho, wo) = (h - KERNEL + 1, w - KERNEL + 1);
        let centred: Vec<i32> = x.iter().map(|&v| v as i32 - self.input.zero_point).collect();
        let zp = self.output.zero_point;
        let floor = if self.spec.relu { zp.max(-128) } else { -128 };
        let mut out = vec![0i8; c_out * ho * wo];
        let mut acc = vec![0i32; ho * wo];
        for o in 0..c_out {
            acc.iter_mut().for_each(|a| *a = self.bias[o]);
            for i in 0..c_in {
                let xi = &centred[i * h * w..(i + 1) * h * w];
                for ki in 0..KERNEL {
                    for kj in 0..KERNEL {
                        let k = self.weight[((o * c_in + i) * KERNEL + ki) * KERNEL + kj] as i32;
                        if k == 0 {
                            continue;
                        }
                        for p in 0..ho {
                            let row = &xi[(p + ki) * w + kj..(p + ki) * w + kj + wo];
                            for (a, &xv) in acc[p * wo..(p + 1) * wo].iter_mut().zip(row) {
                                *a += k * xv;
                            }
                        }
                    }
                }
            }
            for (dst, &a) in out[o * ho * wo..(o + 1) * ho * wo].iter_mut().zip(&acc) {
                *dst = (self.requant.apply(a) as i64 + zp as i64).clamp(floor as i64, 127) as i8;
            }
        }
        (out, ho, wo)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QPath {
    pub convs: [QConv; 3],
}

/// Output of one integer forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedOutput {
    pub class: Class,
    /// `max(u, 255 - u)` where `u` is the sigmoid output on 0..=255.
    pub confidence_q: u8,
    /// Sigmoid output `u` on 0..=255 (probability ≈ u / 256).
    pub prob_q: u8,
    pub logit_q: i8,
    pub latent: Vec<i8>,
}

impl QuantizedOutput {
    pub fn probability(&self) -> f64 {
        self.prob_q as f64 / 256.0
    }

    pub fn confidence(&self) -> f64 {
        self.confidence_q as f64 / 255.0
    }
}

/// Quantised weights, their parameters and biases of one conv layer.
pub(crate) type ConvRecord = (Vec<i8>, QuantParams, Vec<i32>);

/// INT8 classifier ready for integer-only inference.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedModel {
    pub arch: Architecture,
    pub calibration: Calibration,
    pub paths: Vec<QPath>,
    pub head_weight: Vec<i8>,
    pub head_params: QuantParams,
    pub head_bias: i32,
    head_requant: FixedMultiplier,
    /// Logit code (offset by 128) to sigmoid code.
    prob_lut: [u8; 256],
}

impl QuantizedModel {
    /// Builds the model from integer tensors; multipliers and the sigmoid
    /// table are derived from the quantisation parameters.
    pub(crate) fn assemble(
        arch: Architecture,
        calibration: Calibration,
        conv_weights: Vec<[ConvRecord; 3]>,
        head_weight: Vec<i8>,
        head_params: QuantParams,
        head_bias: i32,
    ) -> Result<Self> {
        let n = arch.n_paths();
        if conv_weights.len() != n || calibration.inputs.len() != n || calibration.hidden.len() != n {
            return Err(KwsError::Shape(format!("quantised model needs {n} paths")));
        }
        if head_weight.len() != arch.latent_len() {
            return Err(KwsError::Shape(format!(
                "head has {} weights, expected {}",
                head_weight.len(),
                arch.latent_len()
            )));
        }
        let mut paths = Vec::with_capacity(n);
        for (p, convs) in conv_weights.into_iter().enumerate() {
            let sites = [
                calibration.inputs[p],
                calibration.hidden[p][0],
                calibration.hidden[p][1],
                calibration.latent,
            ];
            let mut it = convs.into_iter().enumerate().map(|(l, (w, wp, b))| {
                let spec = crate::nn::CONV_SPECS[l];
                let expect_w = spec.out_channels * spec.in_channels * KERNEL * KERNEL;
                if w.len() != expect_w || b.len() != spec.out_channels {
                    return Err(KwsError::Shape(format!("conv{} tensor sizes do not match", l + 1)));
                }
                Ok(QConv::new(spec, w, wp, b, sites[l], sites[l + 1]))
            });
            let c1 = it.next().expect("three convs")?;
            let c2 = it.next().expect("three convs")?;
            let c3 = it.next().expect("three convs")?;
            paths.push(QPath { convs: [c1, c2, c3] });
        }
        let head_requant = FixedMultiplier::new(
            calibration.latent.scale as f64 * head_params.scale as f64 / calibration.logit.scale as f64,
        );
        let mut prob_lut = [0u8; 256];
        for (i, slot) in prob_lut.iter_mut().enumerate() {
            let z = calibration.logit.dequantize(i as i32 - 128) as f64;
            let q = calibration.prob.quantize(sigmoid(z) as f32) as i32;
            *slot = (q + 128) as u8;
        }
        Ok(QuantizedModel {
            arch,
            calibration,
            paths,
            head_weight,
            head_params,
            head_bias,
            head_requant,
            prob_lut,
        })
    }

    pub fn latent_len(&self) -> usize {
        self.arch.latent_len()
    }

    pub fn head_bias_scale(&self) -> f32 {
        self.calibration.latent.scale * self.head_params.scale
    }

    /// Quantises the input maps; the only step that reads floats.
    pub fn quantize_inputs(&self, pair: &FeaturePair) -> Vec<Vec<i8>> {
        self.arch
            .select(pair)
            .into_iter()
            .zip(&self.calibration.inputs)
            .map(|(map, params)| map.values.iter().map(|&v| params.quantize(v)).collect())
            .collect()
    }

    pub fn infer(&self, pair: &FeaturePair) -> QuantizedOutput {
        self.infer_quantized(&self.quantize_inputs(pair))
    }

    /// Integer-only forward pass from already-quantised input maps.
    pub fn infer_quantized(&self, inputs: &[Vec<i8>]) -> QuantizedOutput {
        let mut latent = Vec::with_capacity(self.latent_len());
        for (path, input) in self.paths.iter().zip(inputs) {
            let (mut x, mut h, mut w) = (input.clone(), N_BANDS, N_FRAMES);
            for conv in &path.convs {
                (x, h, w) = conv.forward(&x, h, w);
            }
            latent.extend_from_slice(&x);
        }
        let zp_lat = self.calibration.latent.zero_point;
        let acc = latent
            .iter()
            .zip(&self.head_weight)
            .fold(self.head_bias as i64, |a, (&x, &k)| {
                a + (x as i64 - zp_lat as i64) * k as i64
            })
            .clamp(i32::MIN as i64, i32::MAX as i64) as i32;
        let zp_logit = self.calibration.logit.zero_point;
        let logit_q = (self.head_requant.apply(acc) as i64 + zp_logit as i64).clamp(-128, 127) as i8;
        let prob_q = self.prob_lut[(logit_q as i32 + 128) as usize];
        let class = if logit_q as i32 > zp_logit {
            Class::Yes
        } else {
            Class::No
        };
        QuantizedOutput {
            class,
            confidence_q: prob_q.max(255 - prob_q),
            prob_q,
            logit_q,
            latent,
        }
    }

    pub fn dequantize_latent(&self, latent: &[i8]) -> Vec<f32> {
        latent
            .iter()
            .map(|&q| self.calibration.latent.dequantize(q as i32))
            .collect()
    }
}

fn quantize_tensor(t: &Tensor<f32>) -> (Vec<i8>, QuantParams) {
    let params = QuantParams::symmetric(t.max_abs());
    (t.data().iter().map(|&w| params.quantize_symmetric(w)).collect(), params)
}

fn quantize_bias(t: &Tensor<f32>, scale: f32) -> Vec<i32> {
    t.data()
        .iter()
        .map(|&b| {
            (b as f64 / scale as f64)
                .round()
                .clamp(i32::MIN as f64, i32::MAX as f64) as i32
        })
        .collect()
}

/// Converts a float model with calibrated activation sites to INT8.
pub fn quantize_model(model: &KwsModel<f32>, calibration: &Calibration) -> Result<QuantizedModel> {
    let mut conv_weights = Vec::with_capacity(model.paths.len());
    for (p, path) in model.paths.iter().enumerate() {
        let in_sites = [
            calibration.inputs.get(p),
            calibration.hidden.get(p).map(|h| &h[0]),
            calibration.hidden.get(p).map(|h| &h[1]),
        ];
        let mut convs = Vec::with_capacity(3);
        for (conv, site) in path.convs.iter().zip(in_sites) {
            let site =
                site.ok_or_else(|| KwsError::Calibration("calibration has fewer paths than the model".into()))?;
            let (w, wp) = quantize_tensor(&conv.weight);
            let b = quantize_bias(&conv.bias, site.scale * wp.scale);
            convs.push((w, wp, b));
        }
        let arr: [(Vec<i8>, QuantParams, Vec<i32>); 3] = convs.try_into().expect("three convs");
        conv_weights.push(arr);
    }
    let (hw, hp) = quantize_tensor(&model.head.weight);
    let hb = quantize_bias(&model.head.bias, calibration.latent.scale * hp.scale)[0];
    QuantizedModel::assemble(model.arch, calibration.clone(), conv_weights, hw, hp, hb)
}

/// Float model holding exactly the values represented by the INT8 model.
pub fn dequantize_model(qm: &QuantizedModel) -> KwsModel<f32> {
    let mut model = KwsModel::<f32>::zeros(qm.arch);
    for (path, qpath) in model.paths.iter_mut().zip(&qm.paths) {
        for (conv, qc) in path.convs.iter_mut().zip(&qpath.convs) {
            for (dst, &q) in conv.weight.data_mut().iter_mut().zip(&qc.weight) {
                *dst = q as f32 * qc.weight_params.scale;
            }
            let bs = qc.bias_scale();
            for (dst, &q) in conv.bias.data_mut().iter_mut().zip(&qc.bias) {
                *dst = (q as f64 * bs as f64) as f32;
            }
        }
    }
    for (dst, &q) in model.head.weight.data_mut().iter_mut().zip(&qm.head_weight) {
        *dst = q as f32 * qm.head_params.scale;
    }
    model.head.bias.data_mut()[0] = (qm.head_bias as f64 * qm.head_bias_scale() as f64) as f32;
    model
}

/// Weights replaced by their symmetric INT8 round trip; biases untouched.
/// Used for quantisation-aware training with a straight-through gradient.
pub fn fake_quantize_weights(model: &KwsModel<f32>) -> KwsModel<f32> {
    let mut out = model.clone();
    let fq = |t: &mut Tensor<f32>| {
        let params = QuantParams::symmetric(t.max_abs());
        for v in t.data_mut() {
            *v = params.quantize_symmetric(*v) as f32 * params.scale;
        }
    };
    for path in &mut out.paths {
        for conv in &mut path.convs {
            fq(&mut conv.weight);
        }
    }
    fq(&mut out.head.weight);
    out
}
