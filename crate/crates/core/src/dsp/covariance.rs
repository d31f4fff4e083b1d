use crate::error::{Error, Result};

use super::EegTrial;

/// Trace-normalised spatial Gram matrix `X X^T / tr(X X^T)` of one trial.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceFeature {
    matrix: Vec<f64>,
    n: usize,
    pub label: Option<usize>,
}

impl CovarianceFeature {
    /// Wraps an existing `n x n` row-major matrix without re-normalising it.
    pub fn from_matrix(matrix: Vec<f64>, n: usize, label: Option<usize>) -> Result<Self> {
        if n == 0 || matrix.len() != n * n {
            return Err(Error::Shape(format!("{} entries do not form a {n}x{n} matrix", matrix.len())));
        }
        Ok(Self { matrix, n, label })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.n + j]
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }
}

/// `Z = X X^T / tr(X X^T)`; with `center` each channel's mean is removed first.
pub fn covariance_feature(trial: &EegTrial, center: bool) -> Result<CovarianceFeature> {
    let n = trial.n_channels();
    let rows: Vec<Vec<f64>> = trial
        .channels()
        .map(|c| {
            let mut r: Vec<f64> = c.iter().map(|&v| v as f64).collect();
            if center {
                let mean = r.iter().sum::<f64>() / r.len() as f64;
                r.iter_mut().for_each(|v| *v -= mean);
            }
            r
        })
        .collect();
    let mut gram = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let dot: f64 = rows[i].iter().zip(&rows[j]).map(|(a, b)| a * b).sum();
            gram[i * n + j] = dot;
            gram[j * n + i] = dot;
        }
    }
    let trace: f64 = (0..n).map(|i| gram[i * n + i]).sum();
    if !(trace > 0.0) || !trace.is_finite() {
        return Err(Error::Degenerate(format!("trial has Gram trace {trace}")));
    }
    gram.iter_mut().for_each(|v| *v /= trace);
    CovarianceFeature::from_matrix(gram, n, trial.label)
}
