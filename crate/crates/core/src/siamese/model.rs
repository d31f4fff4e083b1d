use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::dsp::CovarianceFeature;
use crate::decomposition::Pair;
use crate::error::{Error, Result};
use crate::nn::checkpoint::{read_checkpoint, write_checkpoint};
use crate::nn::{BatchNorm, Conv2d, Dense, Dropout, Elu, Flatten, Layer, Mode, Relu, Scalar, Sequential, Tensor};

/// Shape and hyperparameters of the embedding network.
///
/// Each conv block is conv -> batchnorm -> ELU; the head is flatten followed by
/// dense -> ReLU blocks, with dropout after the first dense block's ReLU.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Architecture {
    /// Side of the square covariance input.
    pub input_size: usize,
    pub conv_channels: Vec<usize>,
    pub kernel: usize,
    pub padding: usize,
    /// Conv bias is redundant in front of batchnorm's shift and left out by default.
    pub conv_bias: bool,
    pub dense_units: Vec<usize>,
    /// Apply ReLU after the last dense layer, making the embedding non-negative.
    pub final_relu: bool,
    pub dropout: f64,
    pub bn_eps: f64,
    pub bn_momentum: f64,
}

impl Default for Architecture {
    fn default() -> Self {
        Self {
            input_size: 22,
            conv_channels: vec![16, 32],
            kernel: 3,
            padding: 0,
            conv_bias: false,
            dense_units: vec![512, 512],
            final_relu: true,
            dropout: 0.5,
            bn_eps: 1e-5,
            bn_momentum: 0.99,
        }
    }
}

impl Architecture {
    /// Same topology at toy width: 2 and 4 channels, 8 and 8 units, on an 8x8 input.
    pub fn miniature() -> Self {
        Self { input_size: 8, conv_channels: vec![2, 4], dense_units: vec![8, 8], ..Self::default() }
    }

    /// Spatial side after the conv stack.
    pub fn feature_map_side(&self) -> Result<usize> {
        let mut side = self.input_size;
        for _ in &self.conv_channels {
            let padded = side + 2 * self.padding;
            if padded < self.kernel {
                return Err(Error::Shape(format!("input {} too small for the conv stack", self.input_size)));
            }
            side = padded - self.kernel + 1;
        }
        Ok(side)
    }

    pub fn flatten_size(&self) -> Result<usize> {
        let side = self.feature_map_side()?;
        Ok(self.conv_channels.last().copied().unwrap_or(1) * side * side)
    }

    pub fn embedding_dim(&self) -> usize {
        self.dense_units.last().copied().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.input_size == 0 {
            problems.push("input_size must be positive".to_string());
        }
        if self.kernel == 0 {
            problems.push("kernel must be positive".to_string());
        }
        if self.dense_units.is_empty() {
            problems.push("at least one dense layer is required".to_string());
        }
        if self.conv_channels.iter().chain(&self.dense_units).any(|&c| c == 0) {
            problems.push("layer widths must be positive".to_string());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            problems.push(format!("dropout {} outside [0, 1)", self.dropout));
        }
        if !(self.bn_eps > 0.0) {
            problems.push("bn_eps must be positive".to_string());
        }
        if !(0.0..1.0).contains(&self.bn_momentum) {
            problems.push(format!("bn_momentum {} outside [0, 1)", self.bn_momentum));
        }
        if let Err(e) = self.feature_map_side() {
            problems.push(e.to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }

    fn build<T: Scalar>(&self, seed: u64) -> Result<Sequential<T>> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::new();
        let mut channels = 1;
        for &out in &self.conv_channels {
            layers.push(Layer::Conv2d(Conv2d::he_init(channels, out, self.kernel, self.padding, self.conv_bias, &mut rng)));
            layers.push(Layer::BatchNorm(BatchNorm::new(out, self.bn_eps, self.bn_momentum)));
            layers.push(Layer::Elu(Elu::default()));
            channels = out;
        }
        layers.push(Layer::Flatten(Flatten::default()));
        let mut width = self.flatten_size()?;
        for (i, &units) in self.dense_units.iter().enumerate() {
            layers.push(Layer::Dense(Dense::he_init(width, units, &mut rng)));
            if i + 1 < self.dense_units.len() || self.final_relu {
                layers.push(Layer::Relu(Relu::default()));
            }
            if i == 0 && self.dropout > 0.0 {
                layers.push(Layer::Dropout(Dropout::new(self.dropout, dropout_seed(seed))?));
            }
            width = units;
        }
        Ok(Sequential::new(layers))
    }
}

fn dropout_seed(seed: u64) -> u64 {
    seed ^ 0xD1B5_4A32_D192_ED03
}

/// Twin embedding network: one parameter store applied to both members of a pair.
#[derive(Clone, Debug)]
pub struct SiameseNet<T> {
    pub arch: Architecture,
    pub net: Sequential<T>,
    pub margin: f64,
    pub seed: u64,
}

impl<T: Scalar> SiameseNet<T> {
    /// He-initialised network; identical `(arch, seed)` give identical weights.
    pub fn new(arch: Architecture, margin: f64, seed: u64) -> Result<Self> {
        if !(margin > 0.0) {
            return Err(Error::config(format!("margin {margin} must be positive")));
        }
        let net = arch.build(seed)?;
        Ok(Self { arch, net, margin, seed })
    }

    /// Stacks features into an `(N, 1, S, S)` input.
    pub fn input_tensor(&self, features: &[&CovarianceFeature]) -> Result<Tensor<T>> {
        let s = self.arch.input_size;
        let mut data = Vec::with_capacity(features.len() * s * s);
        for f in features {
            if f.size() != s {
                return Err(Error::Shape(format!("feature is {0}x{0}, network expects {s}x{s}", f.size())));
            }
            data.extend(f.matrix().iter().map(|&v| T::of(v)));
        }
        Tensor::from_vec(&[features.len(), 1, s, s], data)
    }

    /// Inference-mode embedding of one feature.
    pub fn embed(&self, z: &CovarianceFeature) -> Result<Vec<T>> {
        Ok(self.net.infer(self.input_tensor(&[z])?)?.into_data())
    }

    /// Inference-mode embeddings of many features, one row each.
    pub fn embed_all(&self, features: &[&CovarianceFeature]) -> Result<Vec<Vec<T>>> {
        let dim = self.arch.embedding_dim();
        let mut out = Vec::with_capacity(features.len());
        for chunk in features.chunks(64) {
            let e = self.net.infer(self.input_tensor(chunk)?)?;
            out.extend(e.data().chunks(dim).map(<[T]>::to_vec));
        }
        Ok(out)
    }

    /// Batch embedding in either mode. Train mode uses batch statistics and
    /// samples dropout, and needs at least two features.
    pub fn embed_batch(&mut self, features: &[&CovarianceFeature], mode: Mode) -> Result<Tensor<T>> {
        let x = self.input_tensor(features)?;
        self.net.forward(x, mode)
    }

    /// Rescales the last dense layer so the median distance over `pairs`
    /// equals `target`, and returns the factor applied.
    ///
    /// Distances are taken with batch statistics on one joint batch of at most
    /// 128 evenly spaced pairs and without dropout. Running statistics are left
    /// untouched. Both ReLU and the identity are positively homogeneous, so every
    /// distance scales by the same factor. A zero or non-finite median leaves
    /// the network as it was and returns 1.
    pub fn scale_embedding(&mut self, features: &[CovarianceFeature], pairs: &[Pair], target: f64) -> Result<f64> {
        if !(target > 0.0) {
            return Err(Error::config(format!("target distance {target} must be positive")));
        }
        if pairs.is_empty() {
            return Ok(1.0);
        }
        let stride = pairs.len().div_ceil(128);
        let sample: Vec<&Pair> = pairs.iter().step_by(stride).collect();
        let mut inputs = Vec::with_capacity(2 * sample.len());
        for side in 0..2 {
            for p in &sample {
                let i = if side == 0 { p.first } else { p.second };
                inputs.push(features.get(i).ok_or_else(|| {
                    Error::config(format!("pair refers to feature {i} of {}", features.len()))
                })?);
            }
        }
        let mut x = self.input_tensor(&inputs)?;
        for layer in &self.net.layers {
            x = match layer {
                Layer::BatchNorm(bn) if inputs.len() >= 2 => bn.clone().forward(x, Mode::Train)?,
                other => other.infer(x)?,
            };
        }
        let dim = self.arch.embedding_dim();
        let rows: Vec<&[T]> = x.data().chunks(dim).collect();
        let b = sample.len();
        let mut d: Vec<f64> = (0..b).map(|k| euclidean(rows[k], rows[b + k])).collect();
        d.sort_by(f64::total_cmp);
        let median = d[b / 2];
        if !(median > 0.0 && median.is_finite()) {
            return Ok(1.0);
        }
        let factor = target / median;
        if let Some(Layer::Dense(last)) = self.net.layers.iter_mut().rev().find(|l| matches!(l, Layer::Dense(_))) {
            for v in last.weight.value.data_mut().iter_mut().chain(last.bias.value.data_mut()) {
                *v = T::of(v.as_f64() * factor);
            }
        }
        Ok(factor)
    }

    /// Euclidean distance between the inference-mode embeddings.
    pub fn distance(&self, z1: &CovarianceFeature, z2: &CovarianceFeature) -> Result<f64> {
        Ok(euclidean(&self.embed(z1)?, &self.embed(z2)?))
    }

    /// Single-copy checkpoint of the shared parameters.
    pub fn to_checkpoint(&self) -> Result<Vec<u8>> {
        let meta = json!({ "architecture": self.arch, "margin": self.margin, "seed": self.seed });
        write_checkpoint(&self.net, dropout_seed(self.seed), meta)
    }

    pub fn from_checkpoint(bytes: &[u8]) -> Result<Self> {
        let (net, meta) = read_checkpoint::<T>(bytes)?;
        let arch: Architecture = serde_json::from_value(meta["architecture"].clone())
            .map_err(|e| Error::Format(format!("checkpoint architecture: {e}")))?;
        let margin = meta["margin"].as_f64().ok_or_else(|| Error::Format("checkpoint lacks margin".into()))?;
        let seed = meta["seed"].as_u64().ok_or_else(|| Error::Format("checkpoint lacks seed".into()))?;
        let expected = arch.build::<T>(seed)?.specs(dropout_seed(seed));
        if net.specs(dropout_seed(seed)) != expected {
            return Err(Error::Format("checkpoint layers do not match its architecture".into()));
        }
        Ok(Self { arch, net, margin, seed })
    }

    pub fn cast<U: Scalar>(&self) -> SiameseNet<U> {
        SiameseNet { arch: self.arch.clone(), net: self.net.cast(dropout_seed(self.seed)), margin: self.margin, seed: self.seed }
    }
}

pub fn euclidean<T: Scalar>(a: &[T], b: &[T]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x.as_f64() - y.as_f64()).powi(2)).sum::<f64>().sqrt()
}

/// Outcome of thresholding one pair distance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairPrediction {
    Same,
    Different,
}

impl PairPrediction {
    /// `Same` iff `distance < threshold`; a distance exactly at the threshold is `Different`.
    pub fn from_distance(distance: f64, threshold: f64) -> Self {
        if distance < threshold {
            PairPrediction::Same
        } else {
            PairPrediction::Different
        }
    }
}

pub fn predict_pair<T: Scalar>(
    model: &SiameseNet<T>,
    z1: &CovarianceFeature,
    z2: &CovarianceFeature,
    threshold: f64,
) -> Result<PairPrediction> {
    Ok(PairPrediction::from_distance(model.distance(z1, z2)?, threshold))
}
