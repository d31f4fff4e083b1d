use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// How to partition a labelled set.
#[derive(Clone, Debug, PartialEq)]
pub enum SplitSpec {
    /// Proportions summing to 1; each class is allocated by largest remainder.
    Fractions(Vec<f64>),
    /// `k` near-equal folds per class.
    Folds(usize),
}

/// Per-class proportional partition of trial indices, from a seeded shuffle.
///
/// `labels` are 1-based class labels. Each returned part lists indices in
/// ascending order, and together the parts cover every index exactly once.
pub fn stratified_split(labels: &[usize], spec: &SplitSpec, seed: u64) -> Result<Vec<Vec<usize>>> {
    let fractions = match spec {
        SplitSpec::Fractions(f) => {
            if f.is_empty() || f.iter().any(|&x| !(x >= 0.0)) || (f.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return Err(Error::config(format!("split fractions {f:?} must be non-negative and sum to 1")));
            }
            f.clone()
        }
        SplitSpec::Folds(k) => {
            if *k == 0 {
                return Err(Error::config("fold count must be positive"));
            }
            vec![1.0 / *k as f64; *k]
        }
    };
    if let Some(i) = labels.iter().position(|&l| l == 0) {
        return Err(Error::Shape(format!("trial {i} is unlabelled")));
    }
    let parts_needed = fractions.iter().filter(|&&f| f > 0.0).count();
    let classes = labels.iter().copied().max().unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut parts = vec![Vec::new(); fractions.len()];
    for class in 1..=classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.is_empty() {
            continue;
        }
        if members.len() < parts_needed {
            return Err(Error::Degenerate(format!(
                "class {class} has {} trials, fewer than {parts_needed} partitions",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        let mut start = 0;
        for (part, count) in parts.iter_mut().zip(allocate(members.len(), &fractions, spec)) {
            part.extend_from_slice(&members[start..start + count]);
            start += count;
        }
    }
    parts.iter_mut().for_each(|p| p.sort_unstable());
    Ok(parts)
}

fn allocate(n: usize, fractions: &[f64], spec: &SplitSpec) -> Vec<usize> {
    if let SplitSpec::Folds(k) = spec {
        return (0..*k).map(|i| n / k + usize::from(i < n % k)).collect();
    }
    let exact: Vec<f64> = fractions.iter().map(|f| f * n as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..fractions.len()).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
    let mut left = n - counts.iter().sum::<usize>();
    for i in order.into_iter().cycle() {
        if left == 0 {
            break;
        }
        if fractions[i] > 0.0 {
            counts[i] += 1;
            left -= 1;
        }
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(per: usize, k: usize) -> Vec<usize> {
        (1..=k).flat_map(|c| std::iter::repeat_n(c, per)).collect()
    }

    fn per_class(part: &[usize], labels: &[usize], c: usize) -> usize {
        part.iter().filter(|&&i| labels[i] == c).count()
    }

    #[test]
    fn half_split() {
        let l = labels(60, 4);
        let parts = stratified_split(&l, &SplitSpec::Fractions(vec![0.5, 0.5]), 1).unwrap();
        for c in 1..=4 {
            assert_eq!(per_class(&parts[0], &l, c), 30);
            assert_eq!(per_class(&parts[1], &l, c), 30);
        }
    }

    #[test]
    fn identity_partition() {
        let l = labels(5, 3);
        let parts = stratified_split(&l, &SplitSpec::Fractions(vec![1.0]), 1).unwrap();
        assert_eq!(parts, vec![(0..15).collect::<Vec<_>>()]);
    }

    #[test]
    fn five_folds() {
        let l = labels(60, 4);
        let parts = stratified_split(&l, &SplitSpec::Folds(5), 3).unwrap();
        assert_eq!(parts.len(), 5);
        for p in &parts {
            for c in 1..=4 {
                assert_eq!(per_class(p, &l, c), 12);
            }
        }
        let l = labels(10, 4);
        for p in stratified_split(&l, &SplitSpec::Folds(5), 3).unwrap() {
            assert_eq!(p.len(), 8);
        }
    }

    #[test]
    fn seeded() {
        let l = labels(20, 3);
        let spec = SplitSpec::Folds(4);
        assert_eq!(stratified_split(&l, &spec, 9).unwrap(), stratified_split(&l, &spec, 9).unwrap());
        assert_ne!(stratified_split(&l, &spec, 9).unwrap(), stratified_split(&l, &spec, 10).unwrap());
    }

    #[test]
    fn errors() {
        let l = labels(3, 2);
        assert!(stratified_split(&l, &SplitSpec::Folds(5), 0).is_err());
        assert!(stratified_split(&l, &SplitSpec::Fractions(vec![0.5, 0.6]), 0).is_err());
        assert!(stratified_split(&[1, 0], &SplitSpec::Folds(1), 0).is_err());
    }
}
