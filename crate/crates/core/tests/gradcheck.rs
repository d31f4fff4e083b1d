mod common;

use common::*;
use rand::Rng;
use siamese_bci::nn::{gradient_check, Dense, Elu, Layer, Mode, Sequential, SquaredNormHead, Tensor};

#[test]
fn every_layer_matches_finite_differences() {
    for kind in LAYER_KINDS {
        for seed in 0..24 {
            let rep = layer_gradcheck(kind, seed);
            assert!(rep.max_rel_error.max(rep.input_rel_error) < 1e-4, "{kind} seed {seed}: {rep:?}");
        }
    }
}

#[test]
fn miniature_stack_through_contrastive_loss() {
    for seed in 0..20 {
        for margin in [2.0, 5.0] {
            for mode in [Mode::Infer, Mode::Train] {
                let rep = miniature_pair_gradcheck(seed, 16, margin, mode);
                assert!(rep.max_rel_error < 1e-4, "seed {seed} margin {margin} {mode:?}: {rep:?}");
            }
        }
    }
}

#[test]
fn linear_layer_with_squared_norm() {
    let mut r = rng(1);
    let mut net = Sequential::new(vec![Layer::Dense(Dense::he_init(6, 4, &mut r))]);
    let x = Tensor::from_vec(&[3, 6], gaussian(&mut r, 18)).unwrap();
    let rep = gradient_check(&mut net, &x, Mode::Train, &SquaredNormHead).unwrap();
    assert!(rep.max_rel_error.max(rep.input_rel_error) < 1e-7, "{rep:?}");
}

#[test]
fn elu_straddling_zero() {
    let mut r = rng(2);
    let x: Vec<f64> = (0..40).map(|_| r.random_range(-0.5..0.5)).collect();
    let mut net = Sequential::new(vec![Layer::Elu(Elu::default())]);
    let rep = gradient_check(&mut net, &Tensor::from_vec(&[4, 10], x).unwrap(), Mode::Train, &SquaredNormHead).unwrap();
    assert!(rep.input_rel_error < 1e-5, "{rep:?}");
}

#[test]
fn non_finite_loss_is_an_error() {
    let mut net = Sequential::new(vec![Layer::Elu(Elu::default())]);
    let x = Tensor::from_vec(&[1, 2], vec![f64::INFINITY, 1.0]).unwrap();
    assert!(gradient_check(&mut net, &x, Mode::Train, &SquaredNormHead).is_err());
}
