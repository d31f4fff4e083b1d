use crate::decomposition::PairLabel;
use crate::error::{Error, Result};
use crate::nn::gradcheck::LossHead;
use crate::nn::{Scalar, Tensor};

/// Weighted contrastive loss of one pair and its derivative with respect to `d`.
///
/// Similar pairs (`y = 0`) pay `d^2 / 2`; dissimilar pairs (`y = 1`) pay
/// `max(0, m - d)^2 / 2`.
pub fn contrastive_loss(d: f64, label: PairLabel, margin: f64, weight: f64) -> (f64, f64) {
    match label {
        PairLabel::Similar => (weight * 0.5 * d * d, weight * d),
        PairLabel::Dissimilar => {
            let gap = (margin - d).max(0.0);
            (weight * 0.5 * gap * gap, -weight * gap)
        }
    }
}

/// Loss of a stacked pair batch and the gradient with respect to the embeddings.
#[derive(Clone, Debug)]
pub struct PairLoss<T> {
    /// `sum(w * L) / pairs`.
    pub loss: f64,
    /// Unnormalised `sum(w * L)`.
    pub weighted_sum: f64,
    pub distances: Vec<f64>,
    pub grad: Tensor<T>,
}

/// Contrastive loss over embeddings laid out as `[first members; second members]`,
/// i.e. rows `i` and `i + B` form pair `i`.
pub fn pair_loss<T: Scalar>(
    embeddings: &Tensor<T>,
    targets: &[(PairLabel, f64)],
    margin: f64,
) -> Result<PairLoss<T>> {
    let b = targets.len();
    let s = embeddings.shape();
    if s.len() != 2 || s[0] != 2 * b || b == 0 {
        return Err(Error::Shape(format!("{} pairs need (2 x {b}, D) embeddings, got {s:?}", b)));
    }
    let dim = s[1];
    let e = embeddings.data();
    let mut grad = Tensor::zeros(s);
    let mut distances = Vec::with_capacity(b);
    let mut total = 0.0;
    let scale = 1.0 / b as f64;
    for (i, &(label, w)) in targets.iter().enumerate() {
        let (e1, e2) = (&e[i * dim..(i + 1) * dim], &e[(b + i) * dim..(b + i + 1) * dim]);
        let d = super::euclidean(e1, e2);
        let (l, dl_dd) = contrastive_loss(d, label, margin, w);
        total += l;
        distances.push(d);
        if d > 0.0 && dl_dd != 0.0 {
            let k = dl_dd * scale / d;
            let g = grad.data_mut();
            for j in 0..dim {
                let diff = e1[j].as_f64() - e2[j].as_f64();
                g[i * dim + j] = T::of(k * diff);
                g[(b + i) * dim + j] = T::of(-k * diff);
            }
        }
    }
    Ok(PairLoss { loss: total * scale, weighted_sum: total, distances, grad })
}

/// [`pair_loss`] as a gradient-check objective.
#[derive(Clone, Debug)]
pub struct ContrastiveHead {
    pub targets: Vec<(PairLabel, f64)>,
    pub margin: f64,
}

impl LossHead for ContrastiveHead {
    fn loss_and_grad(&self, output: &Tensor<f64>) -> Result<(f64, Tensor<f64>)> {
        let out = pair_loss(output, &self.targets, self.margin)?;
        Ok((out.loss, out.grad))
    }
}
