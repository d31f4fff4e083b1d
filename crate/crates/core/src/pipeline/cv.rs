use serde::{Deserialize, Serialize};

use crate::data::{stratified_split, SplitSpec};
use crate::decomposition::CodingMatrix;
use crate::dsp::CovarianceFeature;
use crate::error::{Error, Result};
use crate::siamese::EpochRecord;

use super::ensemble::{derive_seed, train_ensemble, EnsembleConfig};
use super::report::{evaluate, Summary};
use super::vote::DecodeRule;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub train_trials: usize,
    pub summary: Summary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: Vec<FoldResult>,
    pub mean_accuracy: f64,
    /// Sample standard deviation over folds.
    pub std_accuracy: f64,
    pub mean_kappa: f64,
    pub std_kappa: f64,
    /// Correct over all held-out trials.
    pub pooled_accuracy: f64,
}

const FOLD_SEED: u64 = 5;

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var.sqrt())
}

/// Stratified folds of the trial indices, seeded from `seed`.
pub fn fold_assignment(labels: &[usize], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::config(format!("cross-validation needs k >= 2 (got {k})")));
    }
    stratified_split(labels, &SplitSpec::Folds(k), derive_seed(seed, FOLD_SEED, 0))
}

/// Train on `k - 1` folds and score the held-out one, for every fold.
pub fn kfold_cv(
    features: &[CovarianceFeature],
    k: usize,
    matrix: &CodingMatrix,
    config: &EnsembleConfig,
    rule: DecodeRule,
    progress: &(dyn Fn(usize, usize, &EpochRecord) + Sync),
) -> Result<CvReport> {
    let labels = features
        .iter()
        .enumerate()
        .map(|(i, f)| f.label.ok_or_else(|| Error::Shape(format!("feature {i} is unlabelled"))))
        .collect::<Result<Vec<_>>>()?;
    let folds = fold_assignment(&labels, k, config.train.seed)?;
    let mut results = Vec::with_capacity(k);
    for (fold, held) in folds.iter().enumerate() {
        let mut is_held = vec![false; features.len()];
        held.iter().for_each(|&i| is_held[i] = true);
        let train: Vec<CovarianceFeature> =
            features.iter().zip(&is_held).filter(|(_, &h)| !h).map(|(f, _)| f.clone()).collect();
        let test: Vec<CovarianceFeature> = held.iter().map(|&i| features[i].clone()).collect();
        let log = |column: usize, r: &EpochRecord| progress(fold, column, r);
        let ensemble = train_ensemble(&train, matrix, config, &log)?;
        let eval = evaluate(&ensemble, &test, rule, config.threads)?;
        let summary = eval.summary.ok_or_else(|| Error::Degenerate(format!("fold {fold} has no labelled trials")))?;
        results.push(FoldResult { fold, train_trials: train.len(), summary });
    }
    let acc: Vec<f64> = results.iter().map(|r| r.summary.accuracy).collect();
    let kap: Vec<f64> = results.iter().map(|r| r.summary.kappa).collect();
    let (mean_accuracy, std_accuracy) = mean_std(&acc);
    let (mean_kappa, std_kappa) = mean_std(&kap);
    let correct: usize = results.iter().map(|r| r.summary.correct).sum();
    let total: usize = results.iter().map(|r| r.summary.trials).sum();
    Ok(CvReport {
        folds: results,
        mean_accuracy,
        std_accuracy,
        mean_kappa,
        std_kappa,
        pooled_accuracy: correct as f64 / total as f64,
    })
}
