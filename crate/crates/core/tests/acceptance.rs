//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion that ran failed.
//!
//! Criteria 1-9 always run. Criterion 10 needs the real datasets and runs
//! only when `KWS_GSCD_DIR` and `KWS_DEMAND_DIR` are set; otherwise it is
//! reported as SKIP. Pass criterion numbers as arguments to run a subset:
//! `cargo test -p kws-core --test acceptance -- 1 4 7`.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use kws_core::audio::{
    mix_at_snr, saturate_i16, synth_keywords, AudioClip, AudioClip8, Environment, MixSpec, SyntheticNoise, CLIP_LEN,
};
use kws_core::cl::{decide, filter_effective, DistanceCounter, Verdict};
use kws_core::features::{FeatureKind, FeatureMap, FeaturePair, Provenance, MAP_LEN, N_BANDS, N_FRAMES};
use kws_core::harness::{
    ablate_state, ablation_spread, evaluate_cells, front_end, load_corpus, load_noise, train_state, Corpus,
    DatasetSource, ExperimentConfig, Sweep, TrainOutcome,
};
use kws_core::nn::{bce_loss, KwsModel, Tensor, PATH_LATENT_LEN};
use kws_core::prototypes::{compute_artifacts, compute_prototypes, Artifacts, ClassArtifacts, LabeledLatent};
use kws_core::quant::{confidence_to_q, QuantParams};
use kws_core::spectral::{build_masks, mean_subtract, normalize01, recombine, DenoiseConfig};
use kws_core::wavelet::{denoise_clip_traced, mad_sigma, quantize_clip, universal_threshold, ThresholdMode};
use kws_core::Class;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            pass,
            detail: detail.into(),
        }
    }
}

/// Trained synthetic state shared by criteria 5, 8 and 9.
struct Trained {
    cfg: ExperimentConfig,
    corpus: Corpus,
    outcome: TrainOutcome,
}

fn trained(slot: &mut Option<Trained>) -> &Trained {
    slot.get_or_insert_with(|| {
        let cfg = ExperimentConfig::default();
        let corpus = load_corpus(&cfg).expect("synthetic corpus");
        let front = front_end(&cfg).expect("front end");
        let outcome = train_state(&cfg, &corpus, &front).expect("training");
        Trained { cfg, corpus, outcome }
    })
}

fn random_pair(rng: &mut impl Rng) -> FeaturePair {
    let mut mfcc = FeatureMap::zeros(FeatureKind::Mfcc);
    let mut logmel = FeatureMap::zeros(FeatureKind::LogMel);
    for v in mfcc.values.iter_mut().chain(logmel.values.iter_mut()) {
        *v = rng.random_range(0.0..1.0);
    }
    FeaturePair {
        mfcc,
        logmel,
        label: None,
        provenance: Provenance::Runtime,
    }
}

fn c1_architecture() -> Outcome {
    let dual = KwsModel::<f32>::dual(1);
    let single = KwsModel::<f32>::single(1);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let cache = dual.forward(dual.input_tensors(&random_pair(&mut rng))).unwrap();
    let chain_ok =
        cache.activations.iter().all(|acts| {
            acts[0].shape() == [5, 16, 12] && acts[1].shape() == [2, 12, 8] && acts[2].shape() == [5, 8, 4]
        }) && cache.inputs.iter().all(|t| t.shape() == [1, 20, 16]);
    let per_path_ok = PATH_LATENT_LEN == 160
        && cache
            .activations
            .iter()
            .enumerate()
            .all(|(p, acts)| acts[2].len() == 160 && cache.latent[p * 160..(p + 1) * 160] == *acts[2].data());
    let pass = dual.param_count() == 1595
        && single.param_count() == 798
        && chain_ok
        && per_path_ok
        && cache.latent.len() == 320
        && dual.latent_len() == 320
        && single.latent_len() == 160;
    Outcome::new(
        pass,
        format!(
            "params {} (single {}), latent {} = 2 x {}, shape chain {}",
            dual.param_count(),
            single.param_count(),
            cache.latent.len(),
            PATH_LATENT_LEN,
            if chain_ok {
                "20x16 > 16x12 > 12x8 > 8x4"
            } else {
                "WRONG"
            }
        ),
    )
}

/// On/off state of every ReLU unit.
fn relu_pattern(m: &KwsModel<f64>, inputs: &[Tensor<f64>]) -> Vec<bool> {
    let cache = m.forward(inputs.to_vec()).unwrap();
    cache
        .activations
        .iter()
        .flatten()
        .flat_map(|t| t.data().iter().map(|&v| v > 0.0))
        .collect()
}

/// Central differences at step 1e-3 in f64. A perturbation that switches
/// any ReLU unit on or off straddles a kink, where the difference quotient
/// is not a derivative estimate; such coordinates are redrawn.
fn c2_gradients() -> Outcome {
    const COORDS: usize = 160;
    const STEP: f64 = 1e-3;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut model: KwsModel<f64> = KwsModel::<f32>::dual(2).cast();
    // Non-zero biases so that no coordinate is trivially inactive.
    for t in model.params_mut() {
        if t.shape().len() == 1 {
            for v in t.data_mut() {
                *v = rng.random_range(-0.05..0.05);
            }
        }
    }
    let pair = random_pair(&mut rng);
    let inputs: Vec<Tensor<f64>> = model.input_tensors(&pair);
    let target = 1.0;
    let loss = |m: &KwsModel<f64>| bce_loss(m.forward(inputs.clone()).unwrap().logit, target);
    let grads = model.backward(&model.forward(inputs.clone()).unwrap(), target);
    let pattern = relu_pattern(&model, &inputs);

    let sizes: Vec<usize> = model.params().iter().map(|t| t.len()).collect();
    let mut covered = vec![false; sizes.len()];
    let mut worst = 0.0f64;
    let (mut checked, mut kinks) = (0, 0);
    for k in 0..COORDS * 20 {
        if checked == COORDS {
            break;
        }
        // Cycle through the tensors first, then draw uniformly.
        let tensor = if k < sizes.len() * 4 {
            k % sizes.len()
        } else {
            rng.random_range(0..sizes.len())
        };
        let j = rng.random_range(0..sizes[tensor]);
        let mut plus = model.clone();
        plus.params_mut()[tensor].data_mut()[j] += STEP;
        let mut minus = model.clone();
        minus.params_mut()[tensor].data_mut()[j] -= STEP;
        if relu_pattern(&plus, &inputs) != pattern || relu_pattern(&minus, &inputs) != pattern {
            kinks += 1;
            continue;
        }
        let analytic = grads.params()[tensor].data()[j];
        let numeric = (loss(&plus) - loss(&minus)) / (2.0 * STEP);
        let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max(rel);
        covered[tensor] = true;
        checked += 1;
    }
    let n_covered = covered.iter().filter(|&&c| c).count();
    Outcome::new(
        checked >= 100 && worst <= 1e-4,
        format!(
            "{checked} coordinates over {n_covered}/{} tensors ({kinks} kink-straddling redrawn), \
             max relative error {worst:.2e} (limit 1e-4)",
            sizes.len()
        ),
    )
}

fn c3_wavelet() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut max_dev = 0i32;
    for _ in 0..20 {
        let samples: Vec<i16> = (0..CLIP_LEN).map(|_| rng.random_range(-20_000..20_000)).collect();
        let clip = AudioClip::unlabeled(samples);
        let (recon, _) = denoise_clip_traced(&clip, ThresholdMode::Disabled);
        let direct = quantize_clip(&clip);
        for (a, b) in recon.samples.iter().zip(&direct.samples) {
            max_dev = max_dev.max((*a as i32 - *b as i32).abs());
        }
    }
    let mad = mad_sigma(&[0.0, 1.0, 2.0, 100.0]).unwrap();
    let mad_ok = (mad - 1.4826).abs() < 1e-4 && (mad - 1.0 / 0.6745).abs() < 1e-12;
    let ratio = universal_threshold(mad, 1024) / mad;
    let tau_ok = (ratio - 3.7233).abs() < 1e-4 && (universal_threshold(mad, 1024) - 5.520).abs() < 1e-3;

    // 1 kHz tone at amplitude 8192 plus white noise of equal power.
    let tone: Vec<f64> = (0..CLIP_LEN)
        .map(|i| 8192.0 * (2.0 * std::f64::consts::PI * 1000.0 * i as f64 / 16_000.0).sin())
        .collect();
    let sigma = (8192.0f64 * 8192.0 / 2.0).sqrt();
    let normal = Normal::new(0.0, sigma).unwrap();
    let noisy: Vec<i16> = tone
        .iter()
        .map(|&t| saturate_i16(t + normal.sample(&mut rng)))
        .collect();
    let snr = |x: &AudioClip8| {
        let (mut ps, mut pn) = (0.0, 0.0);
        for (&q, &t) in x.samples.iter().zip(&tone) {
            let clean = t / 256.0;
            ps += clean * clean;
            pn += (q as f64 - clean).powi(2);
        }
        10.0 * (ps / pn).log10()
    };
    let noisy_clip = AudioClip::unlabeled(noisy);
    let snr_in = snr(&quantize_clip(&noisy_clip));
    let snr_out = snr(&denoise_clip_traced(&noisy_clip, ThresholdMode::Universal).0);
    Outcome::new(
        max_dev <= 1 && mad_ok && tau_ok && snr_out > snr_in,
        format!(
            "tau=0 max deviation {max_dev} LSB, MAD {mad:.4}, tau/MAD {ratio:.4}, tone SNR {snr_in:.2} -> {snr_out:.2} dB"
        ),
    )
}

fn c4_spectral() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut identity, mut alpha0, mut worst_sum) = (true, true, 0.0f64);
    for _ in 0..500 {
        let mut m = FeatureMap::zeros(FeatureKind::LogMel);
        for v in m.values.iter_mut() {
            *v = rng.random_range(-14.0..6.0);
        }
        let xn = normalize01(&m);
        let (xt, xs) = mean_subtract(&xn);
        let masks = build_masks(&xt, &xs);
        let one = recombine(&xn, &xt, &xs, &masks, &DenoiseConfig::new(1.0).unwrap());
        identity &= one.values == xn.values;
        let zero = recombine(&xn, &xt, &xs, &masks, &DenoiseConfig::new(0.0).unwrap());
        alpha0 &= (0..MAP_LEN).all(|i| zero.values[i] == xt.values[i] * masks.temporal[i]);
        for t in 0..N_FRAMES {
            let s: f64 = (0..N_BANDS).map(|b| xt.get(b, t) as f64).sum();
            worst_sum = worst_sum.max(s.abs());
        }
        for b in 0..N_BANDS {
            let s: f64 = (0..N_FRAMES).map(|t| xs.get(b, t) as f64).sum();
            worst_sum = worst_sum.max(s.abs());
        }
    }
    Outcome::new(
        identity && alpha0 && worst_sum <= 1e-6,
        format!("alpha=1 identity {identity}, alpha=0 = x_t*M_t {alpha0}, max centred sum {worst_sum:.1e}"),
    )
}

fn c5_quantization(t: &Trained) -> Outcome {
    let state = &t.outcome.state;
    let front = front_end(&t.cfg).unwrap();
    let noises: Vec<_> = SyntheticNoise::ALL
        .iter()
        .map(|&k| load_noise(&t.cfg, Environment::Synthetic(k)).unwrap())
        .collect();
    let clips = synth_keywords(500, 0x00AC_CE55);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut agree = 0;
    let mut deviations = Vec::with_capacity(clips.len());
    for (i, clip) in clips.iter().enumerate() {
        let input = if i % 6 == 0 {
            clip.clone()
        } else {
            let snr = [-10.0, -5.0, 0.0, 5.0, 10.0][i % 5];
            let noise = &noises[i % noises.len()];
            mix_at_snr(
                clip,
                noise,
                &MixSpec::random(snr, noise, CLIP_LEN, rng.random()).unwrap(),
            )
            .unwrap()
        };
        let pair = front.process(&input).unwrap();
        let (p, _) = state.model.forward_pair(&pair);
        let q = state.qm.infer(&pair);
        agree += usize::from(Class::from_probability(p as f64) == q.class);
        deviations.push((q.probability() - p as f64).abs());
    }
    deviations.sort_by(f64::total_cmp);
    let p95 = deviations[(deviations.len() * 95).div_ceil(100) - 1];
    let agreement = agree as f64 / clips.len() as f64;

    let mut worst_ratio = 0.0f64;
    let mut check = |w: &[f32], q: &[i8], params: &QuantParams| {
        for (&w, &q) in w.iter().zip(q) {
            let err = (params.dequantize(q as i32) as f64 - w as f64).abs();
            worst_ratio = worst_ratio.max(err / params.scale as f64);
        }
    };
    for (fp, qp) in state.model.paths.iter().zip(&state.qm.paths) {
        for (fc, qc) in fp.convs.iter().zip(&qp.convs) {
            check(fc.weight.data(), &qc.weight, &qc.weight_params);
        }
    }
    check(
        state.model.head.weight.data(),
        &state.qm.head_weight,
        &state.qm.head_params,
    );
    // One f32 rounding step of slack on the scale/2 bound.
    let roundtrip_ok = worst_ratio <= 0.5 + 1e-6;
    Outcome::new(
        agreement >= 0.99 && p95 <= 0.05 && roundtrip_ok,
        format!(
            "argmax agreement {:.2}% on {} inputs, p95 |dp| {p95:.4}, worst weight error {worst_ratio:.4} scale",
            agreement * 100.0,
            clips.len()
        ),
    )
}

/// Straight re-derivation of the selection rule used as the oracle.
fn oracle_accepts(conf_q: u8, thr_q: u8, latent: &[f32], prototype: &[f32], threshold: f64) -> (bool, bool) {
    if conf_q < thr_q {
        return (false, false);
    }
    let mut sum = 0.0f64;
    for i in 0..latent.len() {
        sum += (latent[i] as f64 - prototype[i] as f64).abs();
    }
    (sum / latent.len() as f64 <= threshold, true)
}

fn c6_selection(t: &Trained) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut mismatches = 0;
    let mut expected_ops = 0u64;
    let mut triple_ops = DistanceCounter::default();
    let mut accepted = 0;
    for k in 0..1000 {
        let proto = |rng: &mut ChaCha8Rng| (0..320).map(|_| rng.random_range(0.0f32..4.0)).collect::<Vec<_>>();
        let class_art = |class, rng: &mut ChaCha8Rng| {
            let (mean, std, n) = (
                rng.random_range(0.5..2.0),
                rng.random_range(0.0..0.5),
                rng.random_range(1.7..2.4),
            );
            ClassArtifacts {
                class,
                prototype: proto(rng),
                mean_dist: mean,
                std_dist: std,
                n_sigma: n,
                threshold: mean + n * std,
            }
        };
        let mut artifacts = Artifacts {
            classes: [class_art(Class::No, &mut rng), class_art(Class::Yes, &mut rng)],
        };
        let predicted = if rng.random_bool(0.5) { Class::Yes } else { Class::No };
        let base = &artifacts.get(predicted).prototype;
        let spread = rng.random_range(0.0f32..3.0);
        let latent: Vec<f32> = base.iter().map(|&p| p + rng.random_range(-spread..=spread)).collect();
        if k % 10 == 0 {
            // Place the threshold exactly on the distance to probe the `<=` boundary.
            let d = kws_core::prototypes::mae_distance(&latent, base).unwrap();
            artifacts.classes[predicted.index()].threshold = d;
        }
        let u: u8 = rng.random();
        let conf_q = u.max(255 - u);
        let thr_q = confidence_to_q(rng.random_range(0.6..0.95));
        let art = artifacts.get(predicted);
        let (want, computes) = oracle_accepts(conf_q, thr_q, &latent, &art.prototype, art.threshold);
        expected_ops += u64::from(computes);
        let got = matches!(
            decide(conf_q, predicted, &latent, &artifacts, thr_q, &mut triple_ops),
            Verdict::Accept { .. }
        );
        accepted += usize::from(got);
        mismatches += usize::from(got != want);
    }
    let triples_ok = mismatches == 0 && triple_ops.distance_ops == expected_ops;

    // End to end on the trained model: the counter only advances for
    // inputs that clear the confidence threshold.
    let state = &t.outcome.state;
    let front = front_end(&t.cfg).unwrap();
    let noise = load_noise(&t.cfg, Environment::Synthetic(SyntheticNoise::White)).unwrap();
    let mut counter = DistanceCounter::default();
    let (mut confident, mut leaked) = (0u64, 0u64);
    for (i, clip) in t.corpus.test.iter().take(200).enumerate() {
        let spec = MixSpec::random(-10.0 + (i % 5) as f64 * 5.0, &noise, CLIP_LEN, i as u64).unwrap();
        let pair = front.process(&mix_at_snr(clip, &noise, &spec).unwrap()).unwrap();
        let before = counter.distance_ops;
        let q = state.qm.infer(&pair);
        let _ = filter_effective(&state.qm, &state.artifacts, &pair, 217, &mut counter);
        if q.confidence_q >= 217 {
            confident += 1;
        } else {
            leaked += counter.distance_ops - before;
        }
    }
    let short_circuit_ok = leaked == 0 && counter.distance_ops == confident;
    Outcome::new(
        triples_ok && short_circuit_ok,
        format!(
            "1000 triples, {mismatches} mismatches ({accepted} accepted), distance ops {}/{expected_ops}; \
             model path: {} ops for {confident} confident of 200, {leaked} after low confidence",
            triple_ops.distance_ops, counter.distance_ops
        ),
    )
}

fn c7_prototypes() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let latents: Vec<LabeledLatent> = (0..200)
        .map(|i| LabeledLatent {
            latent: (0..320).map(|_| rng.random_range(-3.0f32..3.0)).collect(),
            class: if i % 2 == 0 { Class::Yes } else { Class::No },
        })
        .collect();
    let protos = compute_prototypes(&latents).unwrap();
    let mean_ok = Class::ALL.iter().all(|&class| {
        let members: Vec<&LabeledLatent> = latents.iter().filter(|l| l.class == class).collect();
        (0..320).all(|j| {
            let mut s = 0.0f64;
            for m in &members {
                s += m.latent[j] as f64;
            }
            protos[class.index()][j] == (s / members.len() as f64) as f32
        })
    });

    // Two latents 2d apart in MAE: both sit d from their mean.
    let d = 0.75;
    let pair_of = |class| {
        let a: Vec<f32> = (0..320).map(|j| 1.0 + if j % 2 == 0 { d } else { -d }).collect();
        let b: Vec<f32> = a.iter().map(|&x| 2.0 - x).collect();
        [LabeledLatent { latent: a, class }, LabeledLatent { latent: b, class }]
    };
    let two: Vec<LabeledLatent> = pair_of(Class::Yes).into_iter().chain(pair_of(Class::No)).collect();
    let art = compute_artifacts(&two, 2.0).unwrap();
    let two_point_ok = art.classes.iter().all(|c| c.mean_dist == d as f64 && c.std_dist == 0.0);

    let mut monotone = true;
    let mut prev = [f64::NEG_INFINITY; 2];
    for k in 0..=40 {
        let a = compute_artifacts(&latents, k as f64 * 0.1).unwrap();
        for c in Class::ALL {
            let th = a.get(c).threshold;
            monotone &= th >= prev[c.index()];
            prev[c.index()] = th;
        }
    }
    Outcome::new(
        mean_ok && two_point_ok && monotone,
        format!("prototype == column mean {mean_ok}, two-point mu=d sigma=0 {two_point_ok}, monotone in n {monotone}"),
    )
}

fn c8_efficacy(t: &Trained) -> Outcome {
    let start = Instant::now();
    let mut cfg = t.cfg.clone();
    cfg.environments = vec![Environment::Synthetic(SyntheticNoise::White)];
    cfg.snrs_db = vec![-10.0];
    cfg.intervals = 25;
    let out = evaluate_cells(&cfg, &t.outcome.state, &t.corpus, true, None).unwrap();
    let c = &out.cells[0];
    let baseline = c.baseline_accuracy.unwrap_or(f64::NAN);
    let drop = c.clean_before - c.clean_after;
    let secs = start.elapsed().as_secs_f64();
    Outcome::new(
        c.final_accuracy >= baseline + 0.03 && drop < 0.02 && secs < 600.0,
        format!(
            "SYN_WHITE -10 dB, 25 intervals: final {:.2}% vs baseline {:.2}%, clean {:.2}% -> {:.2}% ({secs:.0} s)",
            c.final_accuracy * 100.0,
            baseline * 100.0,
            c.clean_before * 100.0,
            c.clean_after * 100.0
        ),
    )
}

/// Intervals per ablation cell; each sweep point repeats the initial
/// adaptation and this many deployment intervals at SNR 0, 5 and 10 dB.
const ABLATION_INTERVALS: usize = 3;

fn c9_ablation(t: &Trained) -> Outcome {
    let mut cfg = t.cfg.clone();
    cfg.environments = vec![Environment::Synthetic(SyntheticNoise::White)];
    cfg.snrs_db = vec![0.0, 5.0, 10.0];
    cfg.intervals = ABLATION_INTERVALS;
    let mut pass = true;
    let mut parts = Vec::new();
    for (sweep, limit) in [(Sweep::Alpha, 0.03), (Sweep::Confidence, 0.01), (Sweep::NSigma, 0.015)] {
        let rows = ablate_state(&cfg, &t.outcome.state, &t.corpus, sweep).unwrap();
        let worst = ablation_spread(&rows)
            .into_iter()
            .map(|(_, _, s)| s)
            .fold(0.0, f64::max);
        pass &= worst < limit;
        parts.push(format!(
            "{} {:.2} (< {:.1})",
            sweep.name(),
            worst * 100.0,
            limit * 100.0
        ));
    }
    Outcome::new(pass, format!("max spread in points: {}", parts.join(", ")))
}

fn c10_full_data() -> Option<Outcome> {
    let gscd = PathBuf::from(std::env::var_os("KWS_GSCD_DIR")?);
    let demand = PathBuf::from(std::env::var_os("KWS_DEMAND_DIR")?);
    let cfg = ExperimentConfig {
        dataset: DatasetSource::Real {
            gscd_dir: gscd,
            demand_dir: demand,
        },
        environments: vec!["TCAR".parse().unwrap(), "DWASHING".parse().unwrap()],
        ..ExperimentConfig::default()
    };
    let run = || -> kws_core::Result<Outcome> {
        let corpus = load_corpus(&cfg)?;
        let front = front_end(&cfg)?;
        let outcome = train_state(&cfg, &corpus, &front)?;
        let eval = evaluate_cells(&cfg, &outcome.state, &corpus, false, None)?;
        let cell = |env: &str, snr: f64| {
            eval.cells
                .iter()
                .find(|c| c.environment == env && c.snr_db == snr)
                .map_or(f64::NAN, |c| c.final_accuracy)
        };
        let samples = |env: &str| {
            eval.rows
                .iter()
                .filter(|r| r.environment == env)
                .map(|r| r.n_inputs)
                .sum::<usize>()
        };
        let clean = outcome.quantized_accuracy;
        let checks = [
            (clean - 0.9963).abs() <= 0.005,
            (cell("TCAR", -10.0) - 0.9456).abs() <= 0.02,
            (cell("TCAR", 0.0) - 0.9528).abs() <= 0.02,
            (cell("DWASHING", -10.0) - 0.9384).abs() <= 0.02,
            samples("TCAR") == 169_695,
            samples("DWASHING") == 169_695,
        ];
        Ok(Outcome::new(
            checks.iter().all(|&c| c),
            format!(
                "clean {:.2}%, TCAR -10/0 dB {:.2}%/{:.2}%, DWASHING -10 dB {:.2}%, samples per environment {}/{}",
                clean * 100.0,
                cell("TCAR", -10.0) * 100.0,
                cell("TCAR", 0.0) * 100.0,
                cell("DWASHING", -10.0) * 100.0,
                samples("TCAR"),
                samples("DWASHING")
            ),
        ))
    };
    Some(run().unwrap_or_else(|e| Outcome::new(false, format!("error: {e}"))))
}

fn main() -> ExitCode {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let wanted = |n: u32| selected.is_empty() || selected.contains(&n);
    let mut shared = None;
    let mut failed = 0;
    let names = [
        "architecture",
        "gradient check",
        "wavelet suite",
        "spectral suite",
        "quantisation agreement",
        "selection oracle",
        "prototype suite",
        "continual-learning efficacy",
        "ablation stability",
        "full-data reproduction",
    ];
    for n in 1..=10u32 {
        if !wanted(n) {
            continue;
        }
        let start = Instant::now();
        let outcome = match n {
            1 => Some(c1_architecture()),
            2 => Some(c2_gradients()),
            3 => Some(c3_wavelet()),
            4 => Some(c4_spectral()),
            5 => Some(c5_quantization(trained(&mut shared))),
            6 => Some(c6_selection(trained(&mut shared))),
            7 => Some(c7_prototypes()),
            8 => Some(c8_efficacy(trained(&mut shared))),
            9 => Some(c9_ablation(trained(&mut shared))),
            _ => c10_full_data(),
        };
        let secs = start.elapsed().as_secs_f64();
        let label = names[n as usize - 1];
        match outcome {
            Some(o) => {
                failed += usize::from(!o.pass);
                println!(
                    "criterion {n:>2} {label:<28} {}  {} [{secs:.1} s]",
                    if o.pass { "PASS" } else { "FAIL" },
                    o.detail
                );
            }
            None => println!("criterion {n:>2} {label:<28} SKIP  set KWS_GSCD_DIR and KWS_DEMAND_DIR to run"),
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
