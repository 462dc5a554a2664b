//! Randomised invariants across the signal chain, quantiser, prototypes
//! and the effective-sample rule.

use kws_core::audio::{
    mean_power, mix_at_snr, mix_gain, resample, AudioClip, Environment, MixSpec, NoiseRecording, SyntheticNoise,
};
use kws_core::cl::{augment_pair, decide, DistanceCounter, Verdict};
use kws_core::features::{
    dct_ii, mfcc_from_logmel, FeatureKind, FeatureMap, FeaturePair, Provenance, MAP_LEN, N_BANDS, N_FRAMES,
};
use kws_core::prototypes::{
    compute_artifacts, compute_prototypes, mae_distance, Artifacts, ClassArtifacts, LabeledLatent,
};
use kws_core::quant::{FixedMultiplier, QuantParams};
use kws_core::spectral::{build_masks, denoise_map, mean_subtract, normalize01, DenoiseConfig};
use kws_core::wavelet::{denoise_samples, haar_decompose, mad_sigma, soft_threshold, ThresholdMode, FRAME_LEN};
use kws_core::Class;
use proptest::collection::vec;
use proptest::prelude::*;

fn map_strategy() -> impl Strategy<Value = FeatureMap> {
    vec(-20.0f32..20.0, MAP_LEN).prop_map(|v| {
        let mut m = FeatureMap::zeros(FeatureKind::LogMel);
        m.values.copy_from_slice(&v);
        m
    })
}

fn non_degenerate(m: &FeatureMap) -> bool {
    let lo = m.values.iter().cloned().fold(f32::INFINITY, f32::min);
    let hi = m.values.iter().cloned().fold(f32::NEG_INFINITY, f32::max);
    hi - lo > 1e-3
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mix_gain_hits_requested_snr(
        p_clean in 1.0f64..1e8,
        p_noise in 1.0f64..1e8,
        snr in -20.0f64..30.0,
    ) {
        let g = mix_gain(p_clean, p_noise, snr);
        let measured = 10.0 * (p_clean / (g * g * p_noise)).log10();
        prop_assert!((measured - snr).abs() < 0.01);
    }

    #[test]
    fn mixed_clip_keeps_length_and_label(seed in any::<u64>(), snr in -10.0f64..10.0) {
        let clip = AudioClip::keyword((0..16_000).map(|i| ((i % 50) as i16 - 25) * 40).collect(), Class::Yes);
        let noise = NoiseRecording {
            samples: (0..40_000).map(|i| ((i * 7919 % 601) as i16) - 300).collect(),
            environment: Environment::Synthetic(SyntheticNoise::White),
        };
        let spec = MixSpec::random(snr, &noise, clip.len(), seed).unwrap();
        let out = mix_at_snr(&clip, &noise, &spec).unwrap();
        prop_assert_eq!(out.len(), clip.len());
        prop_assert_eq!(out.class(), Some(Class::Yes));
        // Measured on the unsaturated mix: residual equals the scaled segment up to rounding.
        let seg = noise.segment(spec.offset_samples(), clip.len()).unwrap();
        let g = mix_gain(clip.power(), mean_power(seg), snr);
        for ((&o, &c), &n) in out.samples().iter().zip(clip.samples()).zip(seg) {
            prop_assert!(((o as f64 - c as f64) - g * n as f64).abs() <= 0.5 + 1e-9);
        }
    }

    #[test]
    fn resampling_preserves_duration(len in 1usize..6000, from in prop::sample::select(vec![8_000u32, 22_050, 44_100, 48_000])) {
        let input: Vec<f64> = (0..len).map(|i| (i as f64 * 0.01).sin()).collect();
        let out = resample(&input, from, 16_000);
        let expect = len as f64 * 16_000.0 / from as f64;
        prop_assert!((out.len() as f64 - expect).abs() <= 1.0);
    }

    #[test]
    fn haar_preserves_energy_and_inverts(frame in vec(-30_000.0f64..30_000.0, FRAME_LEN)) {
        let w = haar_decompose(&frame).unwrap();
        let e_in: f64 = frame.iter().map(|x| x * x).sum();
        let e_out: f64 = w.approx.iter().chain(&w.detail).map(|x| x * x).sum();
        prop_assert!((e_in - e_out).abs() <= 1e-6 * e_in.max(1.0));
        for (a, b) in w.reconstruct().iter().zip(&frame) {
            prop_assert!((a - b).abs() <= 1e-6 * b.abs().max(1.0));
        }
    }

    #[test]
    fn mad_is_positively_homogeneous(d in vec(-100.0f64..100.0, 1..300), k in 0.01f64..100.0) {
        let scaled: Vec<f64> = d.iter().map(|x| x * k).collect();
        let (a, b) = (mad_sigma(&scaled).unwrap(), k * mad_sigma(&d).unwrap());
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
    }

    #[test]
    fn soft_threshold_shrinks_towards_zero(c in vec(-1e4f64..1e4, 1..200), tau in 0.0f64..5e3) {
        for (y, x) in soft_threshold(&c, tau).iter().zip(&c) {
            prop_assert!(y.abs() <= x.abs());
            prop_assert!(*y == 0.0 || y.signum() == x.signum());
            prop_assert!((x.abs() - y.abs() - tau).abs() < 1e-9 || *y == 0.0);
        }
    }

    #[test]
    fn wavelet_stage_never_adds_energy(samples in vec(-32_768.0f64..32_767.0, 1..4000)) {
        let (out, _) = denoise_samples(&samples, ThresholdMode::Universal);
        prop_assert_eq!(out.len(), samples.len());
        for (o, i) in out.chunks(FRAME_LEN).zip(samples.chunks(FRAME_LEN)) {
            let eo: f64 = o.iter().map(|x| x * x).sum();
            let ei: f64 = i.iter().map(|x| x * x).sum();
            prop_assert!(eo <= ei * (1.0 + 1e-9) + 1e-6);
        }
    }

    #[test]
    fn normalize_is_idempotent(m in map_strategy()) {
        prop_assume!(non_degenerate(&m));
        let once = normalize01(&m);
        let twice = normalize01(&once);
        for (a, b) in once.values.iter().zip(&twice.values) {
            prop_assert!((a - b).abs() <= 1e-6);
        }
        let lo = once.values.iter().cloned().fold(f32::INFINITY, f32::min);
        let hi = once.values.iter().cloned().fold(f32::NEG_INFINITY, f32::max);
        prop_assert_eq!((lo, hi), (0.0, 1.0));
    }

    #[test]
    fn denoised_maps_stay_in_bound(m in map_strategy(), alpha in 0.0f64..=1.0) {
        let out = denoise_map(&m, &DenoiseConfig::new(alpha).unwrap());
        prop_assert!(out.values.iter().all(|&v| (-1.0..=2.0).contains(&v)));
    }

    #[test]
    fn masks_ignore_per_frame_and_per_band_offsets(m in map_strategy(), shift in vec(-5.0f32..5.0, N_FRAMES + N_BANDS)) {
        let (xt, xs) = mean_subtract(&normalize01(&m));
        let base = build_masks(&xt, &xs);
        let (mut xt2, mut xs2) = (xt.clone(), xs.clone());
        for b in 0..N_BANDS {
            for t in 0..N_FRAMES {
                xt2.set(b, t, xt.get(b, t) + shift[t]);
                xs2.set(b, t, xs.get(b, t) + shift[N_FRAMES + b]);
            }
        }
        let moved = build_masks(&xt2, &xs2);
        // Rounding can only flip entries lying on their mean.
        let flips = base.temporal.iter().zip(&moved.temporal).chain(base.spectral.iter().zip(&moved.spectral))
            .filter(|(a, b)| a != b)
            .count();
        prop_assert!(flips <= 2, "{flips} mask entries changed");
        prop_assert!(base.temporal.iter().chain(&base.spectral).all(|&v| v == 0.0 || v == 1.0));
    }

    #[test]
    fn augmented_mfcc_is_dct_of_augmented_logmel(a in map_strategy(), b in map_strategy()) {
        let clean = FeaturePair { mfcc: mfcc_from_logmel(&a), logmel: a, label: Some(Class::No), provenance: Provenance::Rehearsal };
        let aug = augment_pair(&clean, &b);
        prop_assert_eq!(&aug.mfcc, &mfcc_from_logmel(&aug.logmel));
        for t in 0..N_FRAMES {
            let col: Vec<f64> = aug.logmel.column(t).iter().map(|&v| v as f64).collect();
            let c = dct_ii(&col);
            for (band, v) in c.iter().enumerate() {
                prop_assert!((aug.mfcc.get(band, t) as f64 - v).abs() <= 1e-4 * v.abs().max(1.0));
            }
        }
        // Power-domain sum is never below either input.
        for i in 0..MAP_LEN {
            prop_assert!(aug.logmel.values[i] >= clean.logmel.values[i].max(b.values[i]) - 1e-5);
        }
    }

    #[test]
    fn affine_quantisation_round_trip(lo in -50.0f32..0.0, width in 1e-3f32..100.0, u in 0.0f32..=1.0) {
        let hi = lo + width;
        let p = QuantParams::from_range(lo, hi);
        let x = lo + u * width;
        let err = (p.dequantize(p.quantize(x) as i32) - x).abs();
        prop_assert!(err <= p.scale * 0.5 * (1.0 + 1e-4), "err {err} scale {}", p.scale);
        prop_assert!((-128..=127).contains(&p.zero_point));
    }

    #[test]
    fn symmetric_weights_are_idempotent(w in vec(-3.0f32..3.0, 1..100)) {
        let max = w.iter().fold(0.0f32, |m, x| m.max(x.abs()));
        let p = QuantParams::symmetric(max);
        let once: Vec<f32> = w.iter().map(|&x| p.dequantize(p.quantize_symmetric(x) as i32)).collect();
        let q2 = QuantParams::symmetric(once.iter().fold(0.0f32, |m, x| m.max(x.abs())));
        for &x in &once {
            prop_assert_eq!(q2.dequantize(q2.quantize_symmetric(x) as i32), x);
        }
    }

    #[test]
    fn fixed_multiplier_matches_real_product(real in 1e-6f64..4.0, x in -2_000_000i32..2_000_000) {
        let m = FixedMultiplier::new(real);
        let exact = x as f64 * real;
        prop_assert!((m.apply(x) as f64 - exact).abs() <= 0.5 + exact.abs() * 1e-9 + 1e-9);
    }

    #[test]
    fn prototype_minimises_squared_distance(
        rows in vec(vec(-5.0f32..5.0, 8), 4..20),
        delta in vec(-0.5f32..0.5, 8),
    ) {
        let latents: Vec<LabeledLatent> = rows
            .iter()
            .enumerate()
            .map(|(i, r)| LabeledLatent { latent: r.clone(), class: if i % 2 == 0 { Class::Yes } else { Class::No } })
            .collect();
        let protos = compute_prototypes(&latents).unwrap();
        let sse = |p: &[f32], class: Class| -> f64 {
            latents
                .iter()
                .filter(|l| l.class == class)
                .map(|l| l.latent.iter().zip(p).map(|(a, b)| ((a - b) as f64).powi(2)).sum::<f64>())
                .sum()
        };
        for c in Class::ALL {
            let p = &protos[c.index()];
            let moved: Vec<f32> = p.iter().zip(&delta).map(|(a, d)| a + d).collect();
            prop_assert!(sse(p, c) <= sse(&moved, c) + 1e-6);
        }
    }

    #[test]
    fn threshold_monotone_and_distance_symmetric(
        rows in vec(vec(-5.0f32..5.0, 6), 4..16),
        n1 in 0.0f64..4.0,
        n2 in 0.0f64..4.0,
    ) {
        let latents: Vec<LabeledLatent> = rows
            .iter()
            .enumerate()
            .map(|(i, r)| LabeledLatent { latent: r.clone(), class: if i % 2 == 0 { Class::Yes } else { Class::No } })
            .collect();
        let (lo, hi) = (n1.min(n2), n1.max(n2));
        let a = compute_artifacts(&latents, lo).unwrap();
        let b = compute_artifacts(&latents, hi).unwrap();
        for c in Class::ALL {
            prop_assert!(a.get(c).threshold <= b.get(c).threshold);
            prop_assert_eq!(a.get(c).threshold, a.get(c).mean_dist + lo * a.get(c).std_dist);
        }
        prop_assert_eq!(mae_distance(&rows[0], &rows[1]).unwrap(), mae_distance(&rows[1], &rows[0]).unwrap());
    }

    #[test]
    fn selection_matches_oracle(
        latent in vec(-2.0f32..2.0, 16),
        proto in vec(-2.0f32..2.0, 16),
        threshold in 0.0f64..3.0,
        u in any::<u8>(),
        thr_q in 128u8..=255,
        yes in any::<bool>(),
    ) {
        let predicted = if yes { Class::Yes } else { Class::No };
        let art = |class| ClassArtifacts { class, prototype: proto.clone(), mean_dist: threshold, std_dist: 0.0, n_sigma: 0.0, threshold };
        let artifacts = Artifacts { classes: [art(Class::No), art(Class::Yes)] };
        let conf_q = u.max(255 - u);
        let mut counter = DistanceCounter::default();
        let verdict = decide(conf_q, predicted, &latent, &artifacts, thr_q, &mut counter);
        let dist = latent.iter().zip(&proto).map(|(a, b)| (*a as f64 - *b as f64).abs()).sum::<f64>() / 16.0;
        let expect = conf_q >= thr_q && dist <= threshold;
        prop_assert_eq!(matches!(verdict, Verdict::Accept { .. }), expect);
        prop_assert_eq!(counter.distance_ops, u64::from(conf_q >= thr_q));
    }

    #[test]
    fn feature_pair_records_round_trip(a in map_strategy(), b in map_strategy(), yes in any::<bool>()) {
        let mut mfcc = a;
        mfcc.kind = FeatureKind::Mfcc;
        let pair = FeaturePair { mfcc, logmel: b, label: Some(if yes { Class::Yes } else { Class::No }), provenance: Provenance::Runtime };
        let mut bytes = Vec::new();
        pair.write_to(&mut bytes).unwrap();
        prop_assert_eq!(bytes.len(), 2 + 2 * (1 + 4 * MAP_LEN));
        prop_assert_eq!(FeaturePair::read_from(&mut bytes.as_slice()).unwrap(), pair);
    }
}
