use rand::seq::index;
use rand::Rng;

use crate::dsp::CovarianceFeature;
use crate::error::{Error, Result};

use super::{Code, CodingMatrix};

/// Indices of training features routed to each superset for one column.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupersetSplit {
    pub column: usize,
    pub s0: Vec<usize>,
    pub s1: Vec<usize>,
}

/// Routes class labels (1-based) through column `column`: 0 to `s0`, 1 to `s1`,
/// don't-care dropped.
pub fn split_labels(labels: &[usize], matrix: &CodingMatrix, column: usize) -> Result<SupersetSplit> {
    if column >= matrix.columns() {
        return Err(Error::CodingMatrix(format!("column {column} out of range ({} columns)", matrix.columns())));
    }
    let mut split = SupersetSplit { column, s0: Vec::new(), s1: Vec::new() };
    for (i, &y) in labels.iter().enumerate() {
        if y == 0 || y > matrix.classes() {
            return Err(Error::Shape(format!("label {y} of trial {i} outside 1..={}", matrix.classes())));
        }
        match matrix.get(y - 1, column) {
            Code::Zero => split.s0.push(i),
            Code::One => split.s1.push(i),
            Code::DontCare => {}
        }
    }
    if split.s0.is_empty() {
        return Err(Error::EmptySuperset { column, side: 0 });
    }
    if split.s1.is_empty() {
        return Err(Error::EmptySuperset { column, side: 1 });
    }
    Ok(split)
}

/// [`split_labels`] over labelled features; unlabelled features are an error.
pub fn form_supersets(features: &[CovarianceFeature], matrix: &CodingMatrix, column: usize) -> Result<SupersetSplit> {
    let labels = features
        .iter()
        .enumerate()
        .map(|(i, f)| f.label.ok_or_else(|| Error::Shape(format!("feature {i} is unlabelled"))))
        .collect::<Result<Vec<_>>>()?;
    split_labels(&labels, matrix, column)
}

/// Contrastive pair target.
///
/// `Similar` is `y = 0` and receives the attracting `d^2 / 2` term; `Dissimilar`
/// is `y = 1` and receives the margin hinge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PairLabel {
    Similar,
    Dissimilar,
}

impl PairLabel {
    pub fn y(self) -> u8 {
        match self {
            PairLabel::Similar => 0,
            PairLabel::Dissimilar => 1,
        }
    }

    /// Label from the superset-membership indicator (1 when both members share
    /// a superset). The indicator is inverted so that same-superset pairs are
    /// the ones pulled together by the loss.
    pub fn from_membership(indicator: u8) -> Self {
        if indicator == 1 {
            PairLabel::Similar
        } else {
            PairLabel::Dissimilar
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pair {
    pub first: usize,
    pub second: usize,
    pub label: PairLabel,
    pub weight: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PairBatch {
    pub pairs: Vec<Pair>,
}

impl PairBatch {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn count(&self, label: PairLabel) -> usize {
        self.pairs.iter().filter(|p| p.label == label).count()
    }

    pub fn weighted_count(&self, label: PairLabel) -> f64 {
        self.pairs.iter().filter(|p| p.label == label).map(|p| p.weight).sum()
    }
}

/// Every unordered pair of distinct trials from `s0 ∪ s1`, labelled by whether
/// the two members share a superset, then balanced with [`class_weights`]
/// when both labels occur.
pub fn generate_pairs(split: &SupersetSplit) -> Result<PairBatch> {
    let (a, b) = (split.s0.len(), split.s1.len());
    if a + b < 2 {
        return Err(Error::Degenerate(format!("column {} has {} trials; pairs need 2", split.column, a + b)));
    }
    let mut pairs = Vec::with_capacity((a + b) * (a + b - 1) / 2);
    let mut push = |first, second, same: bool| {
        pairs.push(Pair { first, second, label: PairLabel::from_membership(same as u8), weight: 1.0 })
    };
    for set in [&split.s0, &split.s1] {
        for (i, &x) in set.iter().enumerate() {
            for &y in &set[i + 1..] {
                push(x, y, true);
            }
        }
    }
    for &x in &split.s0 {
        for &y in &split.s1 {
            push(x, y, false);
        }
    }
    let batch = PairBatch { pairs };
    if batch.count(PairLabel::Similar) > 0 && batch.count(PairLabel::Dissimilar) > 0 {
        class_weights(batch)
    } else {
        Ok(batch)
    }
}

/// Weights each pair by `total / (2 * count(label))` so both labels carry equal mass.
pub fn class_weights(mut batch: PairBatch) -> Result<PairBatch> {
    let total = batch.len() as f64;
    let similar = batch.count(PairLabel::Similar) as f64;
    let dissimilar = batch.count(PairLabel::Dissimilar) as f64;
    if similar == 0.0 || dissimilar == 0.0 {
        return Err(Error::Degenerate("class weights need both pair labels present".into()));
    }
    for p in &mut batch.pairs {
        let n = if p.label == PairLabel::Similar { similar } else { dissimilar };
        p.weight = total / (2.0 * n);
    }
    Ok(batch)
}

/// Uniform sample of `n` pairs without replacement, re-weighted on the sample.
/// Returns the batch unchanged when `n >= len`.
pub fn subsample_pairs(batch: &PairBatch, n: usize, rng: &mut impl Rng) -> Result<PairBatch> {
    if n >= batch.len() {
        return Ok(batch.clone());
    }
    let mut picked: Vec<usize> = index::sample(rng, batch.len(), n).into_vec();
    picked.sort_unstable();
    let sample = PairBatch { pairs: picked.into_iter().map(|i| batch.pairs[i]).collect() };
    if sample.count(PairLabel::Similar) > 0 && sample.count(PairLabel::Dissimilar) > 0 {
        class_weights(sample)
    } else {
        Ok(sample)
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::super::Scheme;
    use super::*;

    fn labels(per_class: usize, k: usize) -> Vec<usize> {
        (1..=k).flat_map(|c| std::iter::repeat_n(c, per_class)).collect()
    }

    #[test]
    fn ovr_first_column_sizes() {
        let m = CodingMatrix::build(Scheme::Ovr, 4).unwrap();
        let s = split_labels(&labels(10, 4), &m, 0).unwrap();
        assert_eq!((s.s1.len(), s.s0.len()), (10, 30));
    }

    #[test]
    fn ovo_last_column_excludes_others() {
        let m = CodingMatrix::build(Scheme::Ovo, 4).unwrap();
        let s = split_labels(&labels(10, 4), &m, 5).unwrap();
        assert_eq!((s.s1.len(), s.s0.len()), (10, 10));
        assert!(s.s1.iter().all(|&i| (20..30).contains(&i)));
        assert!(s.s0.iter().all(|&i| i >= 30));
    }

    #[test]
    fn single_class_is_empty_superset() {
        let m = CodingMatrix::build(Scheme::Ovr, 4).unwrap();
        let err = split_labels(&[2, 2, 2], &m, 0).unwrap_err();
        assert!(matches!(err, Error::EmptySuperset { column: 0, side: 1 }));
    }

    #[test]
    fn pair_counts_small() {
        let s = SupersetSplit { column: 0, s0: vec![0, 1, 2], s1: vec![3, 4] };
        let b = generate_pairs(&s).unwrap();
        assert_eq!(b.count(PairLabel::Similar), 4);
        assert_eq!(b.count(PairLabel::Dissimilar), 6);
        assert_eq!(b.len(), 10);
        assert!(b.pairs.iter().all(|p| p.first != p.second));

        let one_each = generate_pairs(&SupersetSplit { column: 0, s0: vec![0], s1: vec![1] }).unwrap();
        assert_eq!((one_each.count(PairLabel::Similar), one_each.count(PairLabel::Dissimilar)), (0, 1));
        assert!(generate_pairs(&SupersetSplit { column: 0, s0: vec![0], s1: vec![] }).is_err());
    }

    #[test]
    fn pair_counts_at_full_dataset_scale() {
        let s = SupersetSplit { column: 0, s0: (0..144).collect(), s1: (144..288).collect() };
        let b = generate_pairs(&s).unwrap();
        assert_eq!(b.count(PairLabel::Similar), 20592);
        assert_eq!(b.count(PairLabel::Dissimilar), 20736);
    }

    #[test]
    fn weights_formula() {
        let mk = |same: usize, cross: usize| PairBatch {
            pairs: (0..same + cross)
                .map(|i| Pair {
                    first: i,
                    second: i + 1,
                    label: if i < same { PairLabel::Similar } else { PairLabel::Dissimilar },
                    weight: 1.0,
                })
                .collect(),
        };
        let b = class_weights(mk(10, 10)).unwrap();
        assert!(b.pairs.iter().all(|p| p.weight == 1.0));
        let b = class_weights(mk(30, 10)).unwrap();
        assert!((b.pairs[0].weight - 40.0 / 60.0).abs() < 1e-15);
        assert_eq!(b.pairs[35].weight, 2.0);
        assert!((b.weighted_count(PairLabel::Similar) - 20.0).abs() < 1e-12);
        assert!((b.weighted_count(PairLabel::Dissimilar) - 20.0).abs() < 1e-12);
        assert!(class_weights(mk(3, 0)).is_err());
    }

    #[test]
    fn membership_indicator_is_inverted() {
        assert_eq!(PairLabel::from_membership(1), PairLabel::Similar);
        assert_eq!(PairLabel::from_membership(0).y(), 1);
    }

    #[test]
    fn subsample_is_balanced_and_seeded() {
        let s = SupersetSplit { column: 0, s0: (0..30).collect(), s1: (30..40).collect() };
        let full = generate_pairs(&s).unwrap();
        let a = subsample_pairs(&full, 200, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = subsample_pairs(&full, 200, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 200);
        let (ws, wd) = (a.weighted_count(PairLabel::Similar), a.weighted_count(PairLabel::Dissimilar));
        assert!((ws - wd).abs() <= 1e-9 * ws);
        assert_eq!(subsample_pairs(&full, 10_000, &mut ChaCha8Rng::seed_from_u64(5)).unwrap(), full);
    }
}
