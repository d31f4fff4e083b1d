mod common;

use common::*;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

use siamese_bci::data::{read_archive, stratified_split, synth_trial, write_archive, Archive, SplitSpec, SynthConfig};
use siamese_bci::decomposition::{generate_pairs, split_labels, CodingMatrix, PairLabel, Scheme, SupersetSplit};
use siamese_bci::dsp::{covariance_feature, design_bandpass, EegTrial, PrepConfig, Preprocessor};
use siamese_bci::nn::{BatchNorm, Conv2d, Mode, Tensor};
use siamese_bci::pipeline::{decode_label, kappa, vote_from_distances, DecodeRule};
use siamese_bci::siamese::{Architecture, SiameseNet};

fn scheme() -> impl Strategy<Value = Scheme> {
    prop_oneof![Just(Scheme::Ovr), Just(Scheme::Ovo)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn covariance_is_unit_trace_symmetric_psd(seed in any::<u64>(), channels in 2usize..10, samples in 20usize..200, center in any::<bool>()) {
        let trial = random_trial(&mut rng(seed), channels, samples);
        let z = covariance_feature(&trial, center).unwrap();
        prop_assert!((z.trace() - 1.0).abs() < 1e-12);
        for i in 0..channels {
            for j in 0..channels {
                prop_assert_eq!(z.get(i, j), z.get(j, i));
            }
        }
        prop_assert!(min_eigenvalue(&z) >= -1e-12);
    }

    #[test]
    fn covariance_ignores_amplitude_scale(seed in any::<u64>(), scale in 0.01f32..100.0) {
        let trial = random_trial(&mut rng(seed), 5, 80);
        let scaled = EegTrial::new(trial.data().iter().map(|v| v * scale).collect(), 5, 80, 250.0, None).unwrap();
        let (a, b) = (covariance_feature(&trial, false).unwrap(), covariance_feature(&scaled, false).unwrap());
        for (x, y) in a.matrix().iter().zip(b.matrix()) {
            // Scaling rounds each f32 sample, so compare against the unit trace.
            prop_assert!((x - y).abs() < 1e-6);
        }
    }

    #[test]
    fn decoder_matches_brute_force(s in scheme(), k in 2usize..7, seed in any::<u64>()) {
        let m = CodingMatrix::build(s, k).unwrap();
        let mut r = rng(seed);
        let votes: Vec<u8> = (0..m.columns()).map(|_| r.random_range(0..2)).collect();
        let d = decode_label(&votes, &m, DecodeRule::Masked).unwrap();
        prop_assert_eq!(d.label, brute_force_decode(&votes, &m));
        prop_assert!((1..=k).contains(&d.label));
    }

    #[test]
    fn each_class_row_decodes_to_itself(s in scheme(), k in 2usize..8) {
        let m = CodingMatrix::build(s, k).unwrap();
        for (i, row) in m.rows_u8().iter().enumerate() {
            let votes: Vec<u8> = row.iter().map(|&c| if c == 2 { 0 } else { c }).collect();
            let d = decode_label(&votes, &m, DecodeRule::Masked).unwrap();
            prop_assert_eq!(d.distances[i], 0.0);
            if s == Scheme::Ovr {
                prop_assert_eq!(d.label, i + 1);
            }
        }
    }

    #[test]
    fn column_vote_ignores_reference_order(seed in any::<u64>(), n0 in 1usize..12, n1 in 1usize..12, threshold in 0.05f64..1.0) {
        let mut r = rng(seed);
        let mut to_s0: Vec<f64> = (0..n0).map(|_| r.random_range(0.0..1.5)).collect();
        let mut to_s1: Vec<f64> = (0..n1).map(|_| r.random_range(0.0..1.5)).collect();
        let before = vote_from_distances(&to_s0, &to_s1, threshold).unwrap();
        to_s0.shuffle(&mut r);
        to_s1.shuffle(&mut r);
        let after = vote_from_distances(&to_s0, &to_s1, threshold).unwrap();
        prop_assert_eq!(before.bit, after.bit);
        prop_assert_eq!((before.votes_s0, before.votes_s1), (after.votes_s0, after.votes_s1));
    }

    #[test]
    fn split_is_a_stratified_partition(seed in any::<u64>(), k in 2usize..6, per_class in 4usize..20, folds in 2usize..5) {
        let labels: Vec<usize> = (1..=k).flat_map(|c| std::iter::repeat_n(c, per_class)).collect();
        let parts = stratified_split(&labels, &SplitSpec::Folds(folds), seed).unwrap();
        prop_assert_eq!(parts.len(), folds);
        let mut all: Vec<usize> = parts.iter().flatten().copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
        for c in 1..=k {
            let counts: Vec<usize> = parts.iter().map(|p| p.iter().filter(|&&i| labels[i] == c).count()).collect();
            prop_assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1, "{:?}", counts);
        }
    }

    #[test]
    fn raw_archive_round_trips(seed in any::<u64>(), trials in 1usize..6, channels in 1usize..5, samples in 1usize..40) {
        let mut r = rng(seed);
        let set: Vec<EegTrial> = (0..trials)
            .map(|_| {
                let data = gaussian(&mut r, channels * samples).into_iter().map(|v| v as f32).collect();
                EegTrial::new(data, channels, samples, 128.0, Some(r.random_range(1..=3))).unwrap()
            })
            .collect();
        let back = read_archive(&write_archive(&Archive::from_trials(&set, 3).unwrap()).unwrap()).unwrap().trials().unwrap();
        prop_assert_eq!(back.len(), set.len());
        for (a, b) in set.iter().zip(&back) {
            prop_assert_eq!(a.data(), b.data());
            prop_assert_eq!(a.label, b.label);
        }
    }

    #[test]
    fn kappa_is_strictly_increasing_in_accuracy(k in 2usize..10, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        prop_assume!(a < b);
        let chance = 1.0 / k as f64;
        prop_assert!(kappa(a, chance).unwrap() < kappa(b, chance).unwrap());
    }

    #[test]
    fn pair_counts_and_balance(a in 1usize..40, b in 1usize..40) {
        let split = SupersetSplit { column: 0, s0: (0..a).collect(), s1: (a..a + b).collect() };
        let pairs = generate_pairs(&split).unwrap();
        prop_assert_eq!(pairs.count(PairLabel::Similar), choose2(a) + choose2(b));
        prop_assert_eq!(pairs.count(PairLabel::Dissimilar), a * b);
        prop_assert_eq!(pairs.len(), choose2(a + b));
        for p in &pairs.pairs {
            prop_assert!(p.first < p.second);
            prop_assert_eq!(p.label == PairLabel::Similar, (p.first < a) == (p.second < a));
        }
        if pairs.count(PairLabel::Similar) > 0 {
            let (ws, wd) = (pairs.weighted_count(PairLabel::Similar), pairs.weighted_count(PairLabel::Dissimilar));
            prop_assert!((ws - wd).abs() <= 1e-9 * ws);
        }
    }

    #[test]
    fn conv_without_bias_is_linear(seed in any::<u64>(), alpha in -3.0f64..3.0) {
        let mut r = rng(seed);
        let conv = Conv2d::<f64>::he_init(2, 3, 3, 1, false, &mut r);
        let shape = [2, 2, 5, 5];
        let x = Tensor::from_vec(&shape, gaussian(&mut r, 100)).unwrap();
        let y = Tensor::from_vec(&shape, gaussian(&mut r, 100)).unwrap();
        let combo = Tensor::from_vec(&shape, x.data().iter().zip(y.data()).map(|(a, b)| alpha * a + b).collect()).unwrap();
        let (fx, fy, fc) = (conv.infer(&x).unwrap(), conv.infer(&y).unwrap(), conv.infer(&combo).unwrap());
        for i in 0..fc.len() {
            prop_assert!((fc.data()[i] - (alpha * fx.data()[i] + fy.data()[i])).abs() < 1e-10);
        }
    }

    #[test]
    fn filter_is_linear(seed in any::<u64>(), alpha in -2.0f64..2.0) {
        let f = design_bandpass(4, 8.0, 25.0, 250.0).unwrap();
        let mut r = rng(seed);
        let (x, y) = (gaussian(&mut r, 300), gaussian(&mut r, 300));
        let combo: Vec<f64> = x.iter().zip(&y).map(|(a, b)| alpha * a + b).collect();
        let (fx, fy, fc) = (f.apply(&x).unwrap(), f.apply(&y).unwrap(), f.apply(&combo).unwrap());
        for i in 0..300 {
            prop_assert!((fc[i] - (alpha * fx[i] + fy[i])).abs() < 1e-9);
        }
    }

    #[test]
    fn designed_filters_are_stable(order in 1usize..9, lo in 1.0f64..40.0, width in 2.0f64..60.0) {
        let f = design_bandpass(order, lo, lo + width, 250.0).unwrap();
        prop_assert!(f.check_stable().is_ok());
        prop_assert!(f.sections.iter().all(|s| s.pole_radius() < 1.0));
        prop_assert!((f.magnitude_db(lo) + 3.0103).abs() < 0.05);
        prop_assert!((f.magnitude_db(lo + width) + 3.0103).abs() < 0.05);
    }
}

#[test]
fn train_mode_batchnorm_standardises_each_channel() {
    let mut r = rng(5);
    let mut bn = BatchNorm::<f64>::new(3, 1e-5, 0.99);
    let x: Vec<f64> = gaussian(&mut r, 4 * 3 * 6 * 6).into_iter().map(|v| 4.0 * v + 7.0).collect();
    let y = bn.forward(Tensor::from_vec(&[4, 3, 6, 6], x).unwrap(), Mode::Train).unwrap();
    for c in 0..3 {
        let vals: Vec<f64> = (0..4).flat_map(|n| y.data()[(n * 3 + c) * 36..(n * 3 + c + 1) * 36].to_vec()).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64;
        assert!(mean.abs() < 1e-12, "channel {c} mean {mean}");
        assert!((var - 1.0).abs() < 1e-5, "channel {c} var {var}");
    }
}

#[test]
fn embedding_distance_is_symmetric_and_zero_on_the_diagonal() {
    let arch = Architecture { input_size: 6, conv_channels: vec![2, 2], dense_units: vec![8, 8], ..Architecture::default() };
    let model = SiameseNet::<f64>::new(arch, 0.5, 9).unwrap();
    let mut r = rng(9);
    let zs: Vec<_> = (0..5).map(|_| covariance_feature(&random_trial(&mut r, 6, 50), false).unwrap()).collect();
    for a in &zs {
        assert_eq!(model.distance(a, a).unwrap(), 0.0);
        for b in &zs {
            assert_eq!(model.distance(a, b).unwrap(), model.distance(b, a).unwrap());
        }
    }
}

#[test]
fn constant_trial_is_a_degenerate_covariance_after_centering() {
    let trial = constant_trial(4, 50, 1.5);
    assert!(covariance_feature(&trial, true).is_err());
    let z = covariance_feature(&trial, false).unwrap();
    assert!(z.matrix().iter().all(|&v| (v - 0.25).abs() < 1e-12));
}

#[test]
fn synthetic_classes_put_their_power_in_their_own_channels() {
    let config = SynthConfig::default();
    let prep = Preprocessor::new(PrepConfig::default(), config.fs).unwrap();
    for class in 1..=config.classes {
        for index in 0..5 {
            let z = prep.feature(&synth_trial(&config, class, index).unwrap()).unwrap();
            let group = |g: usize| (5 * g..5 * g + 5).map(|c| z.get(c, c)).sum::<f64>();
            let own = group(class - 1);
            for other in (0..config.classes).filter(|&g| g != class - 1) {
                assert!(own > 2.0 * group(other), "class {class} trial {index}: own {own} vs group {other} {}", group(other));
            }
        }
    }
}

#[test]
fn synthetic_trials_are_reproducible_and_distinct() {
    let config = SynthConfig::default();
    let a = synth_trial(&config, 2, 3).unwrap();
    assert_eq!(a.data(), synth_trial(&config, 2, 3).unwrap().data());
    assert_ne!(a.data(), synth_trial(&config, 2, 4).unwrap().data());
    assert_eq!(a.label, Some(2));
}

#[test]
fn ovr_columns_split_one_class_from_the_rest() {
    let labels: Vec<usize> = (1..=4).flat_map(|c| std::iter::repeat_n(c, 3)).collect();
    let m = CodingMatrix::build(Scheme::Ovr, 4).unwrap();
    for column in 0..4 {
        let split = split_labels(&labels, &m, column).unwrap();
        assert_eq!(split.s1.len(), 3);
        assert!(split.s1.iter().all(|&i| labels[i] == column + 1));
        assert_eq!(split.s0.len(), 9);
    }
    let ovo = CodingMatrix::build(Scheme::Ovo, 4).unwrap();
    let split = split_labels(&labels, &ovo, 0).unwrap();
    assert_eq!(split.s0.len() + split.s1.len(), 6);
}
