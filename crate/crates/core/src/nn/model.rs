use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::tensor::{Real, Tensor};
use crate::error::{KwsError, Result};
use crate::features::{FeatureMap, FeaturePair, N_BANDS, N_FRAMES};

pub const KERNEL: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvSpec {
    pub in_channels: usize,
    pub out_channels: usize,
    pub relu: bool,
}

/// Channel widths of one conv path: 1→5→2→5, all 5×5 valid with ReLU.
pub const CONV_SPECS: [ConvSpec; 3] = [
    ConvSpec {
        in_channels: 1,
        out_channels: 5,
        relu: true,
    },
    ConvSpec {
        in_channels: 5,
        out_channels: 2,
        relu: true,
    },
    ConvSpec {
        in_channels: 2,
        out_channels: 5,
        relu: true,
    },
];

/// Flattened conv3 output of one path: 5 × 8 × 4.
pub const PATH_LATENT_LEN: usize = 160;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Architecture {
    /// MFCC path only.
    Single = 1,
    /// MFCC and LogMel paths, concatenated in that order.
    Dual = 2,
}

impl Architecture {
    pub fn n_paths(self) -> usize {
        self as usize
    }

    pub fn latent_len(self) -> usize {
        PATH_LATENT_LEN * self.n_paths()
    }

    pub fn tag(self) -> u8 {
        self as u8
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            1 => Ok(Architecture::Single),
            2 => Ok(Architecture::Dual),
            t => Err(KwsError::Checkpoint(format!("unknown architecture tag {t}"))),
        }
    }

    pub fn path_names(self) -> &'static [&'static str] {
        match self {
            Architecture::Single => &["mfcc"],
            Architecture::Dual => &["mfcc", "logmel"],
        }
    }

    /// Maps fed to each path, in path order.
    pub fn select(self, pair: &FeaturePair) -> Vec<&FeatureMap> {
        match self {
            Architecture::Single => vec![&pair.mfcc],
            Architecture::Dual => vec![&pair.mfcc, &pair.logmel],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Conv2d<T = f32> {
    pub spec: ConvSpec,
    /// `[out, in, 5, 5]`
    pub weight: Tensor<T>,
    /// `[out]`
    pub bias: Tensor<T>,
}

impl<T: Real> Conv2d<T> {
    pub fn zeros(spec: ConvSpec) -> Self {
        Conv2d {
            spec,
            weight: Tensor::zeros(&[spec.out_channels, spec.in_channels, KERNEL, KERNEL]),
            bias: Tensor::zeros(&[spec.out_channels]),
        }
    }

    pub fn param_count(&self) -> usize {
        self.weight.len() + self.bias.len()
    }
}

/// Valid 5×5 cross-correlation plus bias, then ReLU when enabled.
/// `input` is `[C_in, H, W]`; output `[C_out, H-4, W-4]`.
pub fn conv2d_forward<T: Real>(input: &Tensor<T>, conv: &Conv2d<T>) -> Result<Tensor<T>> {
    let [c_in, h, w] = dims3(input)?;
    if c_in != conv.spec.in_channels || h < KERNEL || w < KERNEL {
        return Err(KwsError::Shape(format!(
            "conv expects [{}, >=5, >=5], got {:?}",
            conv.spec.in_channels,
            input.shape()
        )));
    }
    let (ho, wo) = (h - KERNEL + 1, w - KERNEL + 1);
    let c_out = conv.spec.out_channels;
    let x = input.data();
    let wt = conv.weight.data();
    let mut out = vec![T::zero(); c_out * ho * wo];
    for o in 0..c_out {
        let y = &mut out[o * ho * wo..(o + 1) * ho * wo];
        y.iter_mut().for_each(|v| *v = conv.bias.data()[o]);
        for i in 0..c_in {
            let xi = &x[i * h * w..(i + 1) * h * w];
            for ki in 0..KERNEL {
                for kj in 0..KERNEL {
                    let k = wt[((o * c_in + i) * KERNEL + ki) * KERNEL + kj];
                    for p in 0..ho {
                        let row = &xi[(p + ki) * w + kj..(p + ki) * w + kj + wo];
                        let yr = &mut y[p * wo..(p + 1) * wo];
                        for (yv, &xv) in yr.iter_mut().zip(row) {
                            *yv = *yv + k * xv;
                        }
                    }
                }
            }
        }
    }
    if conv.spec.relu {
        out.iter_mut().for_each(|v| *v = v.max(T::zero()));
    }
    Tensor::from_vec(&[c_out, ho, wo], out)
}

/// Backward pass of [`conv2d_forward`]. `output` is the forward result
/// (post-activation) and `grad_out` the loss gradient w.r.t. it.
/// Accumulates into `grads`; returns the input gradient when requested.
pub fn conv2d_backward<T: Real>(
    input: &Tensor<T>,
    output: &Tensor<T>,
    grad_out: &[T],
    conv: &Conv2d<T>,
    grads: &mut Conv2d<T>,
    need_input_grad: bool,
) -> Option<Tensor<T>> {
    let [c_in, h, w] = dims3(input).expect("cached input is 3-d");
    let [c_out, ho, wo] = dims3(output).expect("cached output is 3-d");
    let dz: Vec<T> = if conv.spec.relu {
        grad_out
            .iter()
            .zip(output.data())
            .map(|(&g, &y)| if y > T::zero() { g } else { T::zero() })
            .collect()
    } else {
        grad_out.to_vec()
    };
    let x = input.data();
    let wt = conv.weight.data();
    let mut dx = need_input_grad.then(|| vec![T::zero(); c_in * h * w]);
    for o in 0..c_out {
        let dzo = &dz[o * ho * wo..(o + 1) * ho * wo];
        let db = dzo.iter().copied().sum::<T>();
        grads.bias.data_mut()[o] = grads.bias.data()[o] + db;
        for i in 0..c_in {
            let xi = &x[i * h * w..(i + 1) * h * w];
            for ki in 0..KERNEL {
                for kj in 0..KERNEL {
                    let widx = ((o * c_in + i) * KERNEL + ki) * KERNEL + kj;
                    let mut acc = T::zero();
                    for p in 0..ho {
                        let row = &xi[(p + ki) * w + kj..(p + ki) * w + kj + wo];
                        for (&g, &xv) in dzo[p * wo..(p + 1) * wo].iter().zip(row) {
                            acc = acc + g * xv;
                        }
                    }
                    grads.weight.data_mut()[widx] = grads.weight.data()[widx] + acc;
                    if let Some(dx) = dx.as_mut() {
                        let k = wt[widx];
                        let dxi = &mut dx[i * h * w..(i + 1) * h * w];
                        for p in 0..ho {
                            let drow = &mut dxi[(p + ki) * w + kj..(p + ki) * w + kj + wo];
                            for (d, &g) in drow.iter_mut().zip(&dzo[p * wo..(p + 1) * wo]) {
                                *d = *d + k * g;
                            }
                        }
                    }
                }
            }
        }
    }
    dx.map(|d| Tensor::from_vec(&[c_in, h, w], d).expect("input-shaped gradient"))
}

fn dims3<T: Real>(t: &Tensor<T>) -> Result<[usize; 3]> {
    match *t.shape() {
        [a, b, c] => Ok([a, b, c]),
        _ => Err(KwsError::Shape(format!("expected a 3-d tensor, got {:?}", t.shape()))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvPath<T = f32> {
    pub convs: [Conv2d<T>; 3],
}

impl<T: Real> ConvPath<T> {
    pub fn zeros() -> Self {
        ConvPath {
            convs: CONV_SPECS.map(Conv2d::zeros),
        }
    }

    pub fn param_count(&self) -> usize {
        self.convs.iter().map(Conv2d::param_count).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T = f32> {
    /// `[1, in]`
    pub weight: Tensor<T>,
    /// `[1]`
    pub bias: Tensor<T>,
}

pub fn sigmoid<T: Real>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

/// Binary cross-entropy of `sigmoid(logit)` against `target`, computed
/// stably from the logit.
pub fn bce_loss<T: Real>(logit: T, target: T) -> T {
    logit.max(T::zero()) - logit * target + (T::one() + (-logit.abs()).exp()).ln()
}

/// Everything backpropagation needs from one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache<T = f32> {
    pub inputs: Vec<Tensor<T>>,
    /// Per path, outputs of the three convs.
    pub activations: Vec<[Tensor<T>; 3]>,
    /// Concatenated flattened conv3 outputs (pre-dense).
    pub latent: Vec<T>,
    pub logit: T,
    pub prob: T,
}

/// The keyword classifier: one conv path per input map, concatenation,
/// dense 1-unit head and sigmoid.
#[derive(Debug, Clone, PartialEq)]
pub struct KwsModel<T = f32> {
    pub arch: Architecture,
    pub paths: Vec<ConvPath<T>>,
    pub head: Dense<T>,
}

impl<T: Real> KwsModel<T> {
    pub fn zeros(arch: Architecture) -> Self {
        KwsModel {
            arch,
            paths: (0..arch.n_paths()).map(|_| ConvPath::zeros()).collect(),
            head: Dense {
                weight: Tensor::zeros(&[1, arch.latent_len()]),
                bias: Tensor::zeros(&[1]),
            },
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn new(arch: Architecture, seed: u64) -> Self {
        let mut model = Self::zeros(arch);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for path in &mut model.paths {
            for conv in &mut path.convs {
                let fan_in = conv.spec.in_channels * KERNEL * KERNEL;
                let fan_out = conv.spec.out_channels * KERNEL * KERNEL;
                glorot(&mut conv.weight, fan_in, fan_out, &mut rng);
            }
        }
        glorot(&mut model.head.weight, arch.latent_len(), 1, &mut rng);
        model
    }

    pub fn dual(seed: u64) -> Self {
        Self::new(Architecture::Dual, seed)
    }

    pub fn single(seed: u64) -> Self {
        Self::new(Architecture::Single, seed)
    }

    pub fn param_count(&self) -> usize {
        self.paths.iter().map(ConvPath::param_count).sum::<usize>() + self.head.weight.len() + self.head.bias.len()
    }

    pub fn latent_len(&self) -> usize {
        self.arch.latent_len()
    }

    /// Parameters with stable names, in checkpoint order.
    pub fn named_params(&self) -> Vec<(String, &Tensor<T>)> {
        let mut out = Vec::new();
        for (name, path) in self.arch.path_names().iter().zip(&self.paths) {
            for (l, conv) in path.convs.iter().enumerate() {
                out.push((format!("{name}.conv{}.weight", l + 1), &conv.weight));
                out.push((format!("{name}.conv{}.bias", l + 1), &conv.bias));
            }
        }
        out.push(("head.weight".into(), &self.head.weight));
        out.push(("head.bias".into(), &self.head.bias));
        out
    }

    /// Mutable parameters in the same order as [`Self::named_params`].
    pub fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut out = Vec::new();
        for path in &mut self.paths {
            for conv in &mut path.convs {
                out.push(&mut conv.weight);
                out.push(&mut conv.bias);
            }
        }
        out.push(&mut self.head.weight);
        out.push(&mut self.head.bias);
        out
    }

    pub fn params(&self) -> Vec<&Tensor<T>> {
        self.named_params().into_iter().map(|(_, t)| t).collect()
    }

    pub fn cast<U: Real>(&self) -> KwsModel<U> {
        KwsModel {
            arch: self.arch,
            paths: self
                .paths
                .iter()
                .map(|p| ConvPath {
                    convs: std::array::from_fn(|i| Conv2d {
                        spec: p.convs[i].spec,
                        weight: p.convs[i].weight.cast(),
                        bias: p.convs[i].bias.cast(),
                    }),
                })
                .collect(),
            head: Dense {
                weight: self.head.weight.cast(),
                bias: self.head.bias.cast(),
            },
        }
    }

    /// Input tensors `[1, 20, 16]` for each path.
    pub fn input_tensors(&self, pair: &FeaturePair) -> Vec<Tensor<T>> {
        self.arch
            .select(pair)
            .into_iter()
            .map(|m| {
                Tensor::from_vec(
                    &[1, N_BANDS, N_FRAMES],
                    m.values.iter().map(|&v| T::from_f64(v as f64)).collect(),
                )
                .expect("feature map is 20x16")
            })
            .collect()
    }

    pub fn forward(&self, inputs: Vec<Tensor<T>>) -> Result<ForwardCache<T>> {
        if inputs.len() != self.paths.len() {
            return Err(KwsError::Shape(format!(
                "{} inputs for {} paths",
                inputs.len(),
                self.paths.len()
            )));
        }
        let mut activations = Vec::with_capacity(self.paths.len());
        let mut latent = Vec::with_capacity(self.latent_len());
        for (path, input) in self.paths.iter().zip(&inputs) {
            let a1 = conv2d_forward(input, &path.convs[0])?;
            let a2 = conv2d_forward(&a1, &path.convs[1])?;
            let a3 = conv2d_forward(&a2, &path.convs[2])?;
            latent.extend_from_slice(a3.data());
            activations.push([a1, a2, a3]);
        }
        if latent.len() != self.latent_len() {
            return Err(KwsError::Shape(format!(
                "latent of {} values, expected {}",
                latent.len(),
                self.latent_len()
            )));
        }
        let logit = self.head.bias.data()[0]
            + latent
                .iter()
                .zip(self.head.weight.data())
                .map(|(&a, &b)| a * b)
                .sum::<T>();
        Ok(ForwardCache {
            inputs,
            activations,
            latent,
            logit,
            prob: sigmoid(logit),
        })
    }

    /// `(probability of Yes, latent)`.
    pub fn forward_pair(&self, pair: &FeaturePair) -> (T, Vec<T>) {
        let cache = self
            .forward(self.input_tensors(pair))
            .expect("feature pairs always match the architecture");
        (cache.prob, cache.latent)
    }

    /// Exact gradients of `bce(sigmoid(logit), target)` w.r.t. every
    /// parameter, returned in a zero-initialised model of the same shape.
    pub fn backward(&self, cache: &ForwardCache<T>, target: T) -> KwsModel<T> {
        let mut grads = KwsModel::zeros(self.arch);
        self.accumulate_gradients(cache, target, &mut grads);
        grads
    }

    pub fn accumulate_gradients(&self, cache: &ForwardCache<T>, target: T, grads: &mut KwsModel<T>) {
        let dlogit = cache.prob - target;
        grads.head.bias.data_mut()[0] = grads.head.bias.data()[0] + dlogit;
        for (g, &a) in grads.head.weight.data_mut().iter_mut().zip(&cache.latent) {
            *g = *g + dlogit * a;
        }
        let dlatent: Vec<T> = self.head.weight.data().iter().map(|&w| w * dlogit).collect();
        for (p, (path, acts)) in self.paths.iter().zip(&cache.activations).enumerate() {
            let gpath = &mut grads.paths[p];
            let d3 = &dlatent[p * PATH_LATENT_LEN..(p + 1) * PATH_LATENT_LEN];
            let d2 = conv2d_backward(&acts[1], &acts[2], d3, &path.convs[2], &mut gpath.convs[2], true)
                .expect("input grad requested");
            let d1 = conv2d_backward(&acts[0], &acts[1], d2.data(), &path.convs[1], &mut gpath.convs[1], true)
                .expect("input grad requested");
            conv2d_backward(
                &cache.inputs[p],
                &acts[0],
                d1.data(),
                &path.convs[0],
                &mut gpath.convs[0],
                false,
            );
        }
    }
}

fn glorot<T: Real>(t: &mut Tensor<T>, fan_in: usize, fan_out: usize, rng: &mut impl Rng) {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    for v in t.data_mut() {
        *v = T::from_f64(rng.random_range(-limit..limit));
    }
}
