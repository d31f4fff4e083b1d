//! Oracles and fixtures shared by the integration tests and the acceptance target.
#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use siamese_bci::decomposition::{CodingMatrix, PairLabel};
use siamese_bci::dsp::{CovarianceFeature, EegTrial};
use siamese_bci::nn::{
    gradient_check, BatchNorm, Conv2d, Dense, Dropout, Elu, GradCheckReport, Layer, LinearHead, Mode, Relu,
    Sequential, Tensor,
};
use siamese_bci::siamese::{Architecture, ContrastiveHead, SiameseNet};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

pub fn random_trial(rng: &mut impl Rng, channels: usize, samples: usize) -> EegTrial {
    let data = gaussian(rng, channels * samples).into_iter().map(|v| v as f32).collect();
    EegTrial::new(data, channels, samples, 250.0, None).unwrap()
}

/// Double loop over channels and samples, then trace normalisation.
pub fn naive_gram(trial: &EegTrial) -> Vec<f64> {
    let n = trial.n_channels();
    let mut g = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for t in 0..trial.n_samples() {
                s += trial.channel(i)[t] as f64 * trial.channel(j)[t] as f64;
            }
            g[i * n + j] = s;
        }
    }
    let tr: f64 = (0..n).map(|i| g[i * n + i]).sum();
    g.iter().map(|v| v / tr).collect()
}

pub fn min_eigenvalue(z: &CovarianceFeature) -> f64 {
    let n = z.size();
    let m = DMatrix::from_row_slice(n, n, z.matrix());
    m.symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Scores every row with masked L1 and keeps the first minimum.
pub fn brute_force_decode(votes: &[u8], matrix: &CodingMatrix) -> usize {
    let rows = matrix.rows_u8();
    let mut best = (u32::MAX, 0);
    for (i, row) in rows.iter().enumerate() {
        let score: u32 = row.iter().zip(votes).filter(|(&c, _)| c != 2).map(|(&c, &v)| c.abs_diff(v) as u32).sum();
        if score < best.0 {
            best = (score, i + 1);
        }
    }
    best.1
}

pub fn choose2(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

fn tensor(shape: &[usize], data: Vec<f64>) -> Tensor<f64> {
    Tensor::from_vec(shape, data).unwrap()
}

fn linear_head(rng: &mut impl Rng, n: usize) -> LinearHead {
    LinearHead((0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
}

/// Moves values closer than `gap` to zero away from the ReLU kink.
fn off_kink(v: f64, gap: f64) -> f64 {
    if v.abs() < gap {
        v.signum() * gap + v
    } else {
        v
    }
}

fn output_len(net: &mut Sequential<f64>, x: &Tensor<f64>, mode: Mode) -> usize {
    net.clone().forward(x.clone(), mode).unwrap().len()
}

/// One layer type with randomised shape and values, checked against finite differences.
pub fn layer_gradcheck(kind: &str, seed: u64) -> GradCheckReport {
    let mut r = rng(seed);
    let n = r.random_range(2..4);
    let c = r.random_range(1..4);
    let side = r.random_range(3..7);
    let (layer, input, mode) = match kind {
        "conv2d" => {
            let out = r.random_range(1..4);
            let padding = r.random_range(0..2);
            let mut conv = Conv2d::he_init(c, out, 3, padding, true, &mut r);
            if let Some(b) = conv.params_mut().get_mut(1) {
                b.value.data_mut().iter_mut().for_each(|v| *v = r.random_range(-0.5..0.5));
            }
            (Layer::Conv2d(conv), tensor(&[n, c, side, side], gaussian(&mut r, n * c * side * side)), Mode::Train)
        }
        "batchnorm_train" | "batchnorm_infer" => {
            let mut bn = BatchNorm::new(c, 1e-5, 0.99);
            for p in bn.params_mut() {
                p.value.data_mut().iter_mut().for_each(|v| *v = r.random_range(0.5..1.5));
            }
            let x = tensor(&[n, c, side, side], gaussian(&mut r, n * c * side * side));
            let mode = if kind == "batchnorm_train" { Mode::Train } else { Mode::Infer };
            if mode == Mode::Infer {
                let seedx = tensor(&[n, c, side, side], gaussian(&mut r, n * c * side * side));
                bn.forward(seedx, Mode::Train).unwrap();
            }
            (Layer::BatchNorm(bn), x, mode)
        }
        "elu" => (Layer::Elu(Elu::default()), tensor(&[n, c * side], gaussian(&mut r, n * c * side)), Mode::Train),
        "relu" => {
            let x = gaussian(&mut r, n * c * side).into_iter().map(|v| off_kink(v, 1e-3)).collect();
            (Layer::Relu(Relu::default()), tensor(&[n, c * side], x), Mode::Train)
        }
        "dense" => {
            let inputs = r.random_range(1..12);
            let units = r.random_range(1..8);
            let mut d = Dense::he_init(inputs, units, &mut r);
            d.bias.value.data_mut().iter_mut().for_each(|v| *v = r.random_range(-0.5..0.5));
            (Layer::Dense(d), tensor(&[n, inputs], gaussian(&mut r, n * inputs)), Mode::Train)
        }
        "dropout" => {
            let rate = r.random_range(0.1..0.8);
            let x = tensor(&[n, c * side], gaussian(&mut r, n * c * side));
            (Layer::Dropout(Dropout::new(rate, seed).unwrap()), x, Mode::Train)
        }
        other => panic!("unknown layer kind {other}"),
    };
    let mut net = Sequential::new(vec![layer]);
    let head = linear_head(&mut r, output_len(&mut net, &input, mode));
    gradient_check(&mut net, &input, mode, &head).unwrap()
}

pub const LAYER_KINDS: [&str; 7] = ["conv2d", "batchnorm_train", "batchnorm_infer", "elu", "relu", "dense", "dropout"];

/// Miniature twin network on 8x8 inputs, `pairs` pairs with alternating labels,
/// checked through the contrastive loss. Batchnorm runs on running statistics
/// seeded from a separate batch when `mode` is `Infer`.
pub fn miniature_pair_gradcheck(seed: u64, pairs: usize, margin: f64, mode: Mode) -> GradCheckReport {
    let mut r = rng(seed);
    let arch = Architecture::miniature();
    let mut model = SiameseNet::<f64>::new(arch, margin, seed).unwrap();
    // Generic point. With zero biases a dead row sits exactly on the ReLU
    // kink, and a gradient that is exactly zero is only reproduced by finite
    // differences up to roundoff, which the relative error cannot absorb.
    for layer in &mut model.net.layers {
        match layer {
            Layer::Dense(d) => {
                d.bias.value.data_mut().iter_mut().for_each(|v| *v = r.random_range(0.2..1.0));
            }
            Layer::BatchNorm(bn) => {
                for p in bn.params_mut() {
                    p.value.data_mut().iter_mut().for_each(|v| *v += r.random_range(-0.3..0.3));
                }
            }
            _ => {}
        }
    }
    let size = 2 * pairs * 64;
    if mode == Mode::Infer {
        let warm = tensor(&[2 * pairs, 1, 8, 8], gaussian(&mut r, size));
        model.net.forward(warm, Mode::Train).unwrap();
    }
    let input = tensor(&[2 * pairs, 1, 8, 8], gaussian(&mut r, size));
    center_embedding_units(&mut model.net, &input, mode);
    let targets =
        (0..pairs).map(|i| (if i % 2 == 0 { PairLabel::Similar } else { PairLabel::Dissimilar }, 1.0)).collect();
    let head = ContrastiveHead { targets, margin };
    gradient_check(&mut model.net, &input, mode, &head).unwrap()
}

/// Shifts each embedding unit's bias so its pre-activation is positive on
/// about half the rows, splitting at the widest gap near the median. A distance ignores a shift applied to both members,
/// so the embedding bias only has a gradient through pairs whose members
/// fall on different sides of the ReLU. Dropout is frozen here so a later
/// check reuses the mask sampled now.
fn center_embedding_units(net: &mut Sequential<f64>, input: &Tensor<f64>, mode: Mode) {
    let last = net.layers.iter().rposition(|l| matches!(l, Layer::Dense(_))).unwrap();
    net.set_dropout_frozen(true);
    let mut h = input.clone();
    for layer in &mut net.layers[..=last] {
        h = layer.forward(h, mode).unwrap();
    }
    let (rows, units) = (h.shape()[0], h.shape()[1]);
    let Layer::Dense(d) = &mut net.layers[last] else { unreachable!() };
    for u in 0..units {
        let mut col: Vec<f64> = (0..rows).map(|i| h.data()[i * units + u]).collect();
        col.sort_by(f64::total_cmp);
        let k = (rows / 2 - 2..=rows / 2 + 2).max_by(|&a, &b| (col[a] - col[a - 1]).total_cmp(&(col[b] - col[b - 1]))).unwrap();
        d.bias.value.data_mut()[u] -= 0.5 * (col[k - 1] + col[k]);
    }
}

/// A trial whose every channel is `value` at every sample.
pub fn constant_trial(channels: usize, samples: usize, value: f32) -> EegTrial {
    EegTrial::new(vec![value; channels * samples], channels, samples, 250.0, None).unwrap()
}
