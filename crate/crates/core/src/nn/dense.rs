use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

use super::scalar::{gemm, MatView};
use super::{Param, Scalar, Tensor};

/// Fully connected layer `y = x W^T + b` with `W` of shape `(units, inputs)`.
#[derive(Clone, Debug)]
pub struct Dense<T> {
    pub weight: Param<T>,
    pub bias: Param<T>,
    input: Option<Tensor<T>>,
}

impl<T: Scalar> Dense<T> {
    pub fn new(weight: Tensor<T>, bias: Tensor<T>) -> Result<Self> {
        let ws = weight.shape();
        if ws.len() != 2 || bias.shape() != [ws[0]] {
            return Err(Error::Shape(format!(
                "dense weight {:?} and bias {:?} are inconsistent",
                ws,
                bias.shape()
            )));
        }
        Ok(Self { weight: Param::new(weight), bias: Param::new(bias), input: None })
    }

    pub fn he_init(inputs: usize, units: usize, rng: &mut impl Rng) -> Self {
        let normal = Normal::new(0.0, (2.0 / inputs as f64).sqrt()).expect("positive std");
        let data = (0..inputs * units).map(|_| T::of(normal.sample(rng))).collect();
        Self::new(Tensor::from_vec(&[units, inputs], data).expect("consistent"), Tensor::zeros(&[units]))
            .expect("consistent")
    }

    pub fn units(&self) -> usize {
        self.weight.value.shape()[0]
    }

    pub fn inputs(&self) -> usize {
        self.weight.value.shape()[1]
    }

    pub fn forward(&mut self, x: Tensor<T>) -> Result<Tensor<T>> {
        let out = self.infer(&x)?;
        self.input = Some(x);
        Ok(out)
    }

    /// Forward pass without caching anything for backward.
    pub fn infer(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let s = x.shape();
        if s.len() != 2 || s[1] != self.inputs() {
            return Err(Error::Shape(format!("dense expects (N, {}), got {s:?}", self.inputs())));
        }
        let (n, d, u) = (s[0], s[1], self.units());
        let mut out = Tensor::zeros(&[n, u]);
        for row in out.data_mut().chunks_mut(u) {
            row.copy_from_slice(self.bias.value.data());
        }
        gemm(
            T::one(),
            MatView::rm(x.data(), n, d),
            MatView::rm_t(self.weight.value.data(), d, u),
            T::one(),
            out.data_mut(),
        );
        Ok(out)
    }

    pub fn backward(&mut self, grad_out: &Tensor<T>, need_input_grad: bool) -> Result<Option<Tensor<T>>> {
        let x = self.input.as_ref().ok_or_else(|| Error::Shape("dense backward before forward".into()))?;
        let (n, d, u) = (x.shape()[0], self.inputs(), self.units());
        if grad_out.shape() != [n, u] {
            return Err(Error::Shape(format!("dense grad {:?}, expected {:?}", grad_out.shape(), [n, u])));
        }
        gemm(
            T::one(),
            MatView::rm_t(grad_out.data(), u, n),
            MatView::rm(x.data(), n, d),
            T::one(),
            self.weight.grad.data_mut(),
        );
        for row in grad_out.data().chunks(u) {
            for (g, &v) in self.bias.grad.data_mut().iter_mut().zip(row) {
                *g += v;
            }
        }
        if !need_input_grad {
            return Ok(None);
        }
        let mut gi = Tensor::zeros(&[n, d]);
        gemm(
            T::one(),
            MatView::rm(grad_out.data(), n, u),
            MatView::rm(self.weight.value.data(), u, d),
            T::zero(),
            gi.data_mut(),
        );
        Ok(Some(gi))
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        vec![&mut self.weight, &mut self.bias]
    }

    pub fn params(&self) -> Vec<&Param<T>> {
        vec![&self.weight, &self.bias]
    }
}
