use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{BatchNorm, Conv2d, Dense, Dropout, Elu, Mode, Param, Relu, Scalar, Tensor};

/// Collapses `(N, ...)` to `(N, prod(...))`.
#[derive(Clone, Debug, Default)]
pub struct Flatten {
    input_shape: Option<Vec<usize>>,
}

#[derive(Clone, Debug)]
pub enum Layer<T> {
    Conv2d(Conv2d<T>),
    BatchNorm(BatchNorm<T>),
    Elu(Elu<T>),
    Relu(Relu<T>),
    Dropout(Dropout<T>),
    Flatten(Flatten),
    Dense(Dense<T>),
}

/// Serializable description of one layer, without its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Conv2d { in_channels: usize, out_channels: usize, kernel: usize, padding: usize, bias: bool },
    BatchNorm { features: usize, eps: f64, momentum: f64 },
    Elu,
    Relu,
    Dropout { rate: f64, seed: u64 },
    Flatten,
    Dense { inputs: usize, units: usize },
}

impl<T: Scalar> Layer<T> {
    pub fn forward(&mut self, x: Tensor<T>, mode: Mode) -> Result<Tensor<T>> {
        match self {
            Layer::Conv2d(l) => l.forward(x),
            Layer::BatchNorm(l) => l.forward(x, mode),
            Layer::Elu(l) => Ok(l.forward(x)),
            Layer::Relu(l) => Ok(l.forward(x)),
            Layer::Dropout(l) => Ok(l.forward(x, mode)),
            Layer::Flatten(l) => {
                let s = x.shape().to_vec();
                if s.is_empty() {
                    return Err(Error::Shape("cannot flatten a scalar".into()));
                }
                l.input_shape = Some(s.clone());
                let rest = s[1..].iter().product();
                x.reshape(&[s[0], rest])
            }
            Layer::Dense(l) => l.forward(x),
        }
    }

    /// Inference-mode forward that leaves the layer untouched.
    pub fn infer(&self, x: Tensor<T>) -> Result<Tensor<T>> {
        match self {
            Layer::Conv2d(l) => l.infer(&x),
            Layer::BatchNorm(l) => l.infer(x),
            Layer::Elu(_) => Ok(x.map(super::elu)),
            Layer::Relu(_) => Ok(x.map(super::relu)),
            Layer::Dropout(_) => Ok(x),
            Layer::Flatten(_) => {
                let s = x.shape().to_vec();
                if s.is_empty() {
                    return Err(Error::Shape("cannot flatten a scalar".into()));
                }
                let rest = s[1..].iter().product();
                x.reshape(&[s[0], rest])
            }
            Layer::Dense(l) => l.infer(&x),
        }
    }

    pub fn backward(&mut self, g: &Tensor<T>, need_input_grad: bool) -> Result<Option<Tensor<T>>> {
        match self {
            Layer::Conv2d(l) => l.backward(g, need_input_grad),
            Layer::BatchNorm(l) => l.backward(g, need_input_grad),
            Layer::Elu(l) => l.backward(g).map(Some),
            Layer::Relu(l) => l.backward(g).map(Some),
            Layer::Dropout(l) => Ok(Some(l.backward(g))),
            Layer::Flatten(l) => {
                let s = l.input_shape.as_ref().ok_or_else(|| Error::Shape("flatten backward before forward".into()))?;
                g.clone().reshape(s).map(Some)
            }
            Layer::Dense(l) => l.backward(g, need_input_grad),
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        match self {
            Layer::Conv2d(l) => l.params_mut(),
            Layer::BatchNorm(l) => l.params_mut(),
            Layer::Dense(l) => l.params_mut(),
            _ => Vec::new(),
        }
    }

    pub fn params(&self) -> Vec<&Param<T>> {
        match self {
            Layer::Conv2d(l) => l.params(),
            Layer::BatchNorm(l) => l.params(),
            Layer::Dense(l) => l.params(),
            _ => Vec::new(),
        }
    }

    pub fn spec(&self, dropout_seed: u64) -> LayerSpec {
        match self {
            Layer::Conv2d(l) => LayerSpec::Conv2d {
                in_channels: l.in_channels(),
                out_channels: l.out_channels(),
                kernel: l.kernel(),
                padding: l.padding,
                bias: l.bias.is_some(),
            },
            Layer::BatchNorm(l) => LayerSpec::BatchNorm { features: l.features(), eps: l.eps, momentum: l.momentum },
            Layer::Elu(_) => LayerSpec::Elu,
            Layer::Relu(_) => LayerSpec::Relu,
            Layer::Dropout(l) => LayerSpec::Dropout { rate: l.rate, seed: dropout_seed },
            Layer::Flatten(_) => LayerSpec::Flatten,
            Layer::Dense(l) => LayerSpec::Dense { inputs: l.inputs(), units: l.units() },
        }
    }

    /// Same layer in another precision. Caches are dropped; dropout restarts from `seed`.
    pub fn cast<U: Scalar>(&self, dropout_seed: u64) -> Layer<U> {
        match self {
            Layer::Conv2d(l) => Layer::Conv2d(
                Conv2d::new(l.weight.value.cast(), l.bias.as_ref().map(|b| b.value.cast()), l.padding)
                    .expect("valid source layer"),
            ),
            Layer::BatchNorm(l) => {
                let mut bn = BatchNorm::new(l.features(), l.eps, l.momentum);
                bn.gamma = l.gamma.cast();
                bn.beta = l.beta.cast();
                bn.running_mean = l.running_mean.iter().map(|v| U::of(v.as_f64())).collect();
                bn.running_var = l.running_var.iter().map(|v| U::of(v.as_f64())).collect();
                bn.tracked = l.tracked;
                Layer::BatchNorm(bn)
            }
            Layer::Elu(_) => Layer::Elu(Elu::default()),
            Layer::Relu(_) => Layer::Relu(Relu::default()),
            Layer::Dropout(l) => Layer::Dropout(Dropout::new(l.rate, dropout_seed).expect("valid rate")),
            Layer::Flatten(_) => Layer::Flatten(Flatten::default()),
            Layer::Dense(l) => {
                Layer::Dense(Dense::new(l.weight.value.cast(), l.bias.value.cast()).expect("valid source layer"))
            }
        }
    }
}

/// Feed-forward stack of layers applied in order.
#[derive(Clone, Debug)]
pub struct Sequential<T> {
    pub layers: Vec<Layer<T>>,
}

impl<T: Scalar> Sequential<T> {
    pub fn new(layers: Vec<Layer<T>>) -> Self {
        Self { layers }
    }

    pub fn forward(&mut self, mut x: Tensor<T>, mode: Mode) -> Result<Tensor<T>> {
        for layer in &mut self.layers {
            x = layer.forward(x, mode)?;
        }
        Ok(x)
    }

    /// Inference-mode forward through a shared reference.
    pub fn infer(&self, mut x: Tensor<T>) -> Result<Tensor<T>> {
        for layer in &self.layers {
            x = layer.infer(x)?;
        }
        Ok(x)
    }

    /// Backpropagates `grad` from the output, accumulating parameter gradients.
    /// The input gradient is returned only when requested.
    pub fn backward(&mut self, grad: Tensor<T>, need_input_grad: bool) -> Result<Option<Tensor<T>>> {
        let mut g = grad;
        for (i, layer) in self.layers.iter_mut().enumerate().rev() {
            match layer.backward(&g, i > 0 || need_input_grad)? {
                Some(next) => g = next,
                None => return Ok(None),
            }
        }
        Ok(Some(g))
    }

    pub fn zero_grad(&mut self) {
        self.params_mut().into_iter().for_each(Param::zero_grad);
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        self.layers.iter_mut().flat_map(Layer::params_mut).collect()
    }

    pub fn params(&self) -> Vec<&Param<T>> {
        self.layers.iter().flat_map(Layer::params).collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.params().iter().map(|p| p.value.len()).sum()
    }

    pub fn set_dropout_frozen(&mut self, frozen: bool) {
        for layer in &mut self.layers {
            if let Layer::Dropout(d) = layer {
                d.frozen = frozen;
            }
        }
    }

    pub fn specs(&self, dropout_seed: u64) -> Vec<LayerSpec> {
        self.layers.iter().map(|l| l.spec(dropout_seed)).collect()
    }

    pub fn cast<U: Scalar>(&self, dropout_seed: u64) -> Sequential<U> {
        Sequential { layers: self.layers.iter().map(|l| l.cast(dropout_seed)).collect() }
    }
}

impl LayerSpec {
    /// Layer with zero-initialised parameters matching this description.
    pub fn build<T: Scalar>(&self) -> Result<Layer<T>> {
        Ok(match *self {
            LayerSpec::Conv2d { in_channels, out_channels, kernel, padding, bias } => Layer::Conv2d(Conv2d::new(
                Tensor::zeros(&[out_channels, in_channels, kernel, kernel]),
                bias.then(|| Tensor::zeros(&[out_channels])),
                padding,
            )?),
            LayerSpec::BatchNorm { features, eps, momentum } => {
                let mut bn = BatchNorm::new(features, eps, momentum);
                bn.tracked = true;
                Layer::BatchNorm(bn)
            }
            LayerSpec::Elu => Layer::Elu(Elu::default()),
            LayerSpec::Relu => Layer::Relu(Relu::default()),
            LayerSpec::Dropout { rate, seed } => Layer::Dropout(Dropout::new(rate, seed)?),
            LayerSpec::Flatten => Layer::Flatten(Flatten::default()),
            LayerSpec::Dense { inputs, units } => {
                Layer::Dense(Dense::new(Tensor::zeros(&[units, inputs]), Tensor::zeros(&[units]))?)
            }
        })
    }
}
