use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::decomposition::{subsample_pairs, PairBatch, PairLabel};
use crate::dsp::CovarianceFeature;
use crate::error::{Error, Result};
use crate::nn::{Adam, AdamConfig, Mode, Scalar};

use super::{pair_loss, PairPrediction, SiameseNet};

/// Arithmetic used while training. Stored models are always `f32`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    F32,
    F64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub lr: f64,
    pub margin: f64,
    pub seed: u64,
    /// Same/different cut on the embedding distance; `None` means `margin / 2`.
    pub threshold: Option<f64>,
    /// Pairs drawn (without replacement, fresh each epoch) per epoch; `None` uses all.
    pub pair_subsample: Option<usize>,
    /// Replace the threshold with the one maximising weighted pair accuracy on the training pairs.
    pub calibrate: bool,
    /// Before the first step, rescale the embedding so the median training
    /// pair distance equals the margin. Starting far outside the margin lets
    /// the attracting term alone drive the dense layers' ReLUs to zero.
    pub scale_to_margin: bool,
    pub precision: Precision,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 128,
            epochs: 25,
            lr: 1e-4,
            margin: 0.5,
            seed: 0,
            threshold: None,
            pair_subsample: None,
            calibrate: false,
            scale_to_margin: true,
            precision: Precision::F32,
        }
    }
}

impl TrainConfig {
    pub fn threshold(&self) -> f64 {
        self.threshold.unwrap_or(self.margin / 2.0)
    }

    /// Every violated constraint, not only the first.
    pub fn problems(&self) -> Vec<String> {
        let mut p = Vec::new();
        if self.batch_size < 2 {
            p.push(format!("batch_size must be at least 2 (got {})", self.batch_size));
        }
        if self.epochs == 0 {
            p.push("epochs must be at least 1".to_string());
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            p.push(format!("lr must be finite and non-negative (got {})", self.lr));
        }
        if !(self.margin > 0.0 && self.margin.is_finite()) {
            p.push(format!("margin must be positive (got {})", self.margin));
        }
        let t = self.threshold();
        if !(t > 0.0 && t < self.margin) {
            p.push(format!("threshold must lie in (0, margin) (got {t}, margin {})", self.margin));
        }
        if let Some(n) = self.pair_subsample {
            if n == 0 {
                p.push("pair_subsample must be positive".to_string());
            }
        }
        p
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.problems();
        if p.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(p))
        }
    }
}

/// One line of the training log.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub mean_loss: f64,
    /// Weighted pair accuracy on the validation pairs at the working threshold.
    pub pair_accuracy: Option<f64>,
}

impl fmt::Display for EpochRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "epoch={} loss={:.6e}", self.epoch, self.mean_loss)?;
        match self.pair_accuracy {
            Some(a) => write!(f, " pair_acc={a:.4}"),
            None => write!(f, " pair_acc=na"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    pub history: Vec<EpochRecord>,
    /// Threshold to use with the trained model (calibrated when requested).
    pub threshold: f64,
}

/// Pairs over a feature list, used for validation and calibration.
#[derive(Clone, Copy, Debug)]
pub struct PairSet<'a> {
    pub features: &'a [CovarianceFeature],
    pub pairs: &'a PairBatch,
}

fn training_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ 0x7A11_5EED_0000_0001)
}

/// Adam on the weighted contrastive loss.
///
/// Each step stacks the first members and then the second members of up to
/// `batch_size` pairs into one batch, so both branches share batchnorm
/// statistics and every gradient lands in the single parameter store.
/// `log` receives one record per epoch as it completes.
pub fn train<T: Scalar>(
    model: &mut SiameseNet<T>,
    features: &[CovarianceFeature],
    pairs: &PairBatch,
    validation: Option<PairSet<'_>>,
    config: &TrainConfig,
    mut log: impl FnMut(&EpochRecord),
) -> Result<TrainReport> {
    config.validate()?;
    if pairs.is_empty() {
        return Err(Error::Degenerate("no training pairs".into()));
    }
    if let Some(bad) = pairs.pairs.iter().find(|p| p.first.max(p.second) >= features.len()) {
        return Err(Error::Shape(format!("pair ({}, {}) indexes past {} features", bad.first, bad.second, features.len())));
    }
    if config.scale_to_margin {
        model.scale_embedding(features, &pairs.pairs, config.margin)?;
    }
    let mut rng = training_rng(config.seed);
    let mut adam = Adam::new(AdamConfig { lr: config.lr, ..AdamConfig::default() });
    let mut history = Vec::with_capacity(config.epochs);
    let mut threshold = config.threshold();
    let margin = config.margin;

    for epoch in 1..=config.epochs {
        let mut epoch_pairs = match config.pair_subsample {
            Some(n) => subsample_pairs(pairs, n, &mut rng)?,
            None => pairs.clone(),
        };
        epoch_pairs.pairs.shuffle(&mut rng);
        let mut total = 0.0;
        for (batch_index, chunk) in epoch_pairs.pairs.chunks(config.batch_size).enumerate() {
            let inputs: Vec<&CovarianceFeature> =
                chunk.iter().map(|p| &features[p.first]).chain(chunk.iter().map(|p| &features[p.second])).collect();
            let targets: Vec<(PairLabel, f64)> = chunk.iter().map(|p| (p.label, p.weight)).collect();
            let embeddings = model.embed_batch(&inputs, Mode::Train)?;
            let out = pair_loss(&embeddings, &targets, margin)?;
            if !out.loss.is_finite() || !out.grad.all_finite() {
                return Err(Error::NonFinite { what: "training loss", epoch, batch: batch_index });
            }
            total += out.weighted_sum;
            model.net.zero_grad();
            model.net.backward(out.grad, false)?;
            adam.step(model.net.params_mut());
        }
        let mean_loss = total / epoch_pairs.len() as f64;
        let pair_accuracy = match validation {
            Some(v) => Some(weighted_accuracy(&pair_distances(model, v)?, v.pairs, threshold)),
            None => None,
        };
        let record = EpochRecord { epoch, mean_loss, pair_accuracy };
        log(&record);
        history.push(record);
    }

    if config.calibrate {
        let set = PairSet { features, pairs };
        let sample;
        let set = match config.pair_subsample {
            Some(n) if n < pairs.len() => {
                sample = subsample_pairs(pairs, n, &mut rng)?;
                PairSet { features, pairs: &sample }
            }
            _ => set,
        };
        threshold = calibrate_threshold(&pair_distances(model, set)?, set.pairs, margin);
    }
    Ok(TrainReport { history, threshold })
}

/// Inference-mode distances of every pair in `set`, embedding each feature once.
pub fn pair_distances<T: Scalar>(model: &SiameseNet<T>, set: PairSet<'_>) -> Result<Vec<f64>> {
    let mut used: Vec<usize> = set.pairs.pairs.iter().flat_map(|p| [p.first, p.second]).collect();
    used.sort_unstable();
    used.dedup();
    if used.last().is_some_and(|&i| i >= set.features.len()) {
        return Err(Error::Shape("pair indexes past the feature list".into()));
    }
    let refs: Vec<&CovarianceFeature> = used.iter().map(|&i| &set.features[i]).collect();
    let emb = model.embed_all(&refs)?;
    let slot = |i: usize| used.binary_search(&i).expect("index collected above");
    Ok(set.pairs.pairs.iter().map(|p| super::euclidean(&emb[slot(p.first)], &emb[slot(p.second)])).collect())
}

/// Weighted fraction of pairs whose thresholded prediction matches the label.
pub fn weighted_accuracy(distances: &[f64], pairs: &PairBatch, threshold: f64) -> f64 {
    let mut hit = 0.0;
    let mut all = 0.0;
    for (&d, p) in distances.iter().zip(&pairs.pairs) {
        let same = PairPrediction::from_distance(d, threshold) == PairPrediction::Same;
        if same == (p.label == PairLabel::Similar) {
            hit += p.weight;
        }
        all += p.weight;
    }
    if all > 0.0 {
        hit / all
    } else {
        0.0
    }
}

/// Threshold maximising weighted pair accuracy.
///
/// Candidates are midpoints between consecutive distinct distances, plus one
/// just above the largest. Ties go to the candidate nearest `margin / 2`.
pub fn calibrate_threshold(distances: &[f64], pairs: &PairBatch, margin: f64) -> f64 {
    let mut sorted: Vec<f64> = distances.iter().copied().filter(|d| d.is_finite()).collect();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let default = margin / 2.0;
    if sorted.is_empty() {
        return default;
    }
    let mut candidates: Vec<f64> = sorted.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    candidates.push(sorted[sorted.len() - 1] * (1.0 + 1e-9) + f64::MIN_POSITIVE);
    candidates.retain(|&t| t > 0.0);
    let mut best = (f64::NEG_INFINITY, default);
    for t in candidates {
        let acc = weighted_accuracy(distances, pairs, t);
        let better = acc > best.0 || (acc == best.0 && (t - default).abs() < (best.1 - default).abs());
        if better {
            best = (acc, t);
        }
    }
    best.1
}
