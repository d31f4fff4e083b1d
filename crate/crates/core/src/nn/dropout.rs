use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::{Mode, Scalar, Tensor};

/// Inverted dropout: returns the output and the multiplicative mask applied.
///
/// In train mode each element is zeroed with probability `rate` and survivors
/// are scaled by `1 / (1 - rate)`. Infer mode is the identity.
pub fn dropout<T: Scalar>(
    input: &Tensor<T>,
    rate: f64,
    mode: Mode,
    rng: &mut impl Rng,
) -> Result<(Tensor<T>, Option<Vec<T>>)> {
    check_rate(rate)?;
    if mode == Mode::Infer || rate == 0.0 {
        return Ok((input.clone(), None));
    }
    let mask = sample_mask(input.len(), rate, rng);
    Ok((apply_mask(input, &mask), Some(mask)))
}

fn check_rate(rate: f64) -> Result<()> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::config(format!("dropout rate {rate} outside [0, 1)")));
    }
    Ok(())
}

fn sample_mask<T: Scalar>(len: usize, rate: f64, rng: &mut impl Rng) -> Vec<T> {
    let keep = T::of(1.0 / (1.0 - rate));
    (0..len).map(|_| if rng.random::<f64>() < rate { T::zero() } else { keep }).collect()
}

fn apply_mask<T: Scalar>(x: &Tensor<T>, mask: &[T]) -> Tensor<T> {
    let data = x.data().iter().zip(mask).map(|(&v, &m)| v * m).collect();
    Tensor::from_vec(x.shape(), data).expect("mask matches input")
}

/// Dropout layer owning a seeded generator.
///
/// `frozen` reuses the previous mask when its size matches, which keeps the
/// network a fixed function for finite-difference checks.
#[derive(Clone, Debug)]
pub struct Dropout<T> {
    pub rate: f64,
    pub frozen: bool,
    rng: ChaCha8Rng,
    mask: Option<Vec<T>>,
}

impl<T: Scalar> Dropout<T> {
    pub fn new(rate: f64, seed: u64) -> Result<Self> {
        check_rate(rate)?;
        Ok(Self { rate, frozen: false, rng: ChaCha8Rng::seed_from_u64(seed), mask: None })
    }

    pub fn forward(&mut self, x: Tensor<T>, mode: Mode) -> Tensor<T> {
        if mode == Mode::Infer || self.rate == 0.0 {
            self.mask = None;
            return x;
        }
        let reuse = self.frozen && self.mask.as_ref().is_some_and(|m| m.len() == x.len());
        if !reuse {
            self.mask = Some(sample_mask(x.len(), self.rate, &mut self.rng));
        }
        apply_mask(&x, self.mask.as_ref().expect("mask set above"))
    }

    pub fn backward(&self, grad_out: &Tensor<T>) -> Tensor<T> {
        match &self.mask {
            Some(mask) => apply_mask(grad_out, mask),
            None => grad_out.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_rate_is_identity() {
        let x = Tensor::from_vec(&[4], vec![1.0f64, -2.0, 3.0, 4.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for mode in [Mode::Train, Mode::Infer] {
            assert_eq!(dropout(&x, 0.0, mode, &mut rng).unwrap().0, x);
        }
        assert_eq!(dropout(&x, 0.9, Mode::Infer, &mut rng).unwrap().0, x);
    }

    #[test]
    fn rate_one_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(dropout(&Tensor::<f32>::zeros(&[2]), 1.0, Mode::Train, &mut rng).is_err());
        assert!(Dropout::<f32>::new(1.5, 0).is_err());
    }

    #[test]
    fn expectation_preserved() {
        let x = Tensor::filled(&[100_000], 1.0f64);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (y, _) = dropout(&x, 0.5, Mode::Train, &mut rng).unwrap();
        let mean = y.data().iter().sum::<f64>() / y.len() as f64;
        assert!((0.98..=1.02).contains(&mean), "mean {mean}");
    }

    #[test]
    fn backward_reuses_mask() {
        let mut d = Dropout::<f64>::new(0.5, 4).unwrap();
        let y = d.forward(Tensor::filled(&[64], 1.0), Mode::Train);
        let g = d.backward(&Tensor::filled(&[64], 1.0));
        assert_eq!(y, g);
    }

    #[test]
    fn frozen_mask_is_stable() {
        let mut d = Dropout::<f64>::new(0.5, 4).unwrap();
        d.frozen = true;
        let a = d.forward(Tensor::filled(&[64], 1.0), Mode::Train);
        let b = d.forward(Tensor::filled(&[64], 1.0), Mode::Train);
        assert_eq!(a, b);
    }
}
