use crate::error::{Error, Result};

use super::{Scalar, Tensor};

/// `x` for `x > 0`, `exp(x) - 1` otherwise.
pub fn elu<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        x
    } else {
        x.exp() - T::one()
    }
}

/// Derivative of [`elu`] written in terms of its output; 1 at the origin.
fn elu_grad_from_output<T: Scalar>(y: T) -> T {
    if y >= T::zero() {
        T::one()
    } else {
        y + T::one()
    }
}

pub fn relu<T: Scalar>(x: T) -> T {
    x.max(T::zero())
}

/// ELU with unit alpha.
#[derive(Clone, Debug, Default)]
pub struct Elu<T> {
    output: Option<Tensor<T>>,
}

impl<T: Scalar> Elu<T> {
    pub fn forward(&mut self, mut x: Tensor<T>) -> Tensor<T> {
        x.data_mut().iter_mut().for_each(|v| *v = elu(*v));
        self.output = Some(x.clone());
        x
    }

    pub fn backward(&self, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
        let y = self.output.as_ref().ok_or_else(|| Error::Shape("elu backward before forward".into()))?;
        same_shape(y, grad_out)?;
        let data = y.data().iter().zip(grad_out.data()).map(|(&y, &g)| g * elu_grad_from_output(y)).collect();
        Tensor::from_vec(y.shape(), data)
    }
}

/// ReLU; the derivative at exactly zero is taken as 1.
#[derive(Clone, Debug, Default)]
pub struct Relu<T> {
    input: Option<Tensor<T>>,
}

impl<T: Scalar> Relu<T> {
    pub fn forward(&mut self, x: Tensor<T>) -> Tensor<T> {
        let y = x.map(relu);
        self.input = Some(x);
        y
    }

    pub fn backward(&self, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
        let x = self.input.as_ref().ok_or_else(|| Error::Shape("relu backward before forward".into()))?;
        same_shape(x, grad_out)?;
        let data = x
            .data()
            .iter()
            .zip(grad_out.data())
            .map(|(&x, &g)| if x >= T::zero() { g } else { T::zero() })
            .collect();
        Tensor::from_vec(x.shape(), data)
    }
}

fn same_shape<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::Shape(format!("gradient {:?} does not match activation {:?}", b.shape(), a.shape())));
    }
    Ok(())
}
