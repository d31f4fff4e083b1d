use serde::{Deserialize, Serialize};

use crate::decomposition::{Code, CodingMatrix};
use crate::error::{Error, Result};
use crate::siamese::PairPrediction;

/// Tally of one column classifier over its reference set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnVote {
    pub bit: u8,
    pub votes_s0: usize,
    pub votes_s1: usize,
    /// Pairs predicted "same", over both supersets.
    pub same: usize,
    pub different: usize,
    pub mean_distance_s0: f64,
    pub mean_distance_s1: f64,
    /// Superset votes were level and the mean distances decided.
    pub tie: bool,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Turns the test trial's distances to both reference supersets into one bit.
///
/// A "same" prediction votes for the reference's superset and a "different"
/// one for the opposite superset; the majority wins. Level votes go to the
/// superset with the smaller mean distance, then to 0.
pub fn vote_from_distances(to_s0: &[f64], to_s1: &[f64], threshold: f64) -> Result<ColumnVote> {
    if to_s0.is_empty() || to_s1.is_empty() {
        return Err(Error::Degenerate("voting needs references on both supersets".into()));
    }
    let same = |d: f64| PairPrediction::from_distance(d, threshold) == PairPrediction::Same;
    let same0 = to_s0.iter().filter(|&&d| same(d)).count();
    let same1 = to_s1.iter().filter(|&&d| same(d)).count();
    let votes_s0 = same0 + (to_s1.len() - same1);
    let votes_s1 = same1 + (to_s0.len() - same0);
    let (m0, m1) = (mean(to_s0), mean(to_s1));
    let tie = votes_s0 == votes_s1;
    let bit = match votes_s1.cmp(&votes_s0) {
        std::cmp::Ordering::Greater => 1,
        std::cmp::Ordering::Less => 0,
        std::cmp::Ordering::Equal => u8::from(m1 < m0),
    };
    Ok(ColumnVote {
        bit,
        votes_s0,
        votes_s1,
        same: same0 + same1,
        different: to_s0.len() + to_s1.len() - same0 - same1,
        mean_distance_s0: m0,
        mean_distance_s1: m1,
        tie,
    })
}

/// Distance between a vote vector and a codeword.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecodeRule {
    /// L1 over the columns where the codeword is not don't-care.
    #[default]
    Masked,
    /// Plain L1 with don't-care entries counted as the value 2.
    Literal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decoded {
    /// 1-based class.
    pub label: usize,
    /// Distance to each class codeword.
    pub distances: Vec<f64>,
    /// More than one codeword shared the minimum; the lowest class won.
    pub tie: bool,
}

/// Nearest codeword to `votes`, lowest class index on ties.
pub fn decode_label(votes: &[u8], matrix: &CodingMatrix, rule: DecodeRule) -> Result<Decoded> {
    if votes.len() != matrix.columns() {
        return Err(Error::Shape(format!("{} votes for {} columns", votes.len(), matrix.columns())));
    }
    if let Some(v) = votes.iter().find(|&&v| v > 1) {
        return Err(Error::Shape(format!("vote {v} is not a bit")));
    }
    let distances: Vec<f64> = (0..matrix.classes())
        .map(|i| {
            votes
                .iter()
                .zip(matrix.row(i))
                .filter(|(_, &c)| rule == DecodeRule::Literal || c != Code::DontCare)
                .map(|(&v, &c)| (v as f64 - c.as_u8() as f64).abs())
                .sum()
        })
        .collect();
    let best = distances.iter().copied().fold(f64::INFINITY, f64::min);
    let winners: Vec<usize> = (0..distances.len()).filter(|&i| distances[i] == best).collect();
    Ok(Decoded { label: winners[0] + 1, tie: winners.len() > 1, distances })
}

/// `(accuracy - chance) / (1 - chance)`.
pub fn kappa(accuracy: f64, chance: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&accuracy) {
        return Err(Error::config(format!("accuracy {accuracy} outside [0, 1]")));
    }
    if !(0.0..1.0).contains(&chance) {
        return Err(Error::config(format!("chance level {chance} outside [0, 1)")));
    }
    Ok((accuracy - chance) / (1.0 - chance))
}

/// `counts[true - 1][predicted - 1]`.
pub fn confusion_matrix(truth: &[usize], predicted: &[usize], classes: usize) -> Result<Vec<Vec<usize>>> {
    if truth.len() != predicted.len() {
        return Err(Error::Shape(format!("{} labels against {} predictions", truth.len(), predicted.len())));
    }
    let mut m = vec![vec![0; classes]; classes];
    for (&t, &p) in truth.iter().zip(predicted) {
        if t == 0 || p == 0 || t > classes || p > classes {
            return Err(Error::Shape(format!("label pair ({t}, {p}) outside 1..={classes}")));
        }
        m[t - 1][p - 1] += 1;
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::Scheme;

    #[test]
    fn ovr_table_row() {
        let m = CodingMatrix::build(Scheme::Ovr, 4).unwrap();
        let d = decode_label(&[1, 0, 0, 0], &m, DecodeRule::Masked).unwrap();
        assert_eq!(d.label, 1);
        assert_eq!(d.distances, vec![0.0, 2.0, 2.0, 2.0]);
        assert!(!d.tie);
    }

    #[test]
    fn ovo_masks_dont_care() {
        let m = CodingMatrix::build(Scheme::Ovo, 4).unwrap();
        let d = decode_label(&[1, 1, 1, 0, 0, 0], &m, DecodeRule::Masked).unwrap();
        assert_eq!(d.label, 1);
        assert_eq!(d.distances[0], 0.0);
        let lit = decode_label(&[1, 1, 1, 0, 0, 0], &m, DecodeRule::Literal).unwrap();
        assert_eq!(lit.distances[0], 6.0);
    }

    #[test]
    fn all_zero_ovr_is_a_four_way_tie() {
        let m = CodingMatrix::build(Scheme::Ovr, 4).unwrap();
        let d = decode_label(&[0, 0, 0, 0], &m, DecodeRule::Masked).unwrap();
        assert_eq!((d.label, d.tie), (1, true));
    }

    #[test]
    fn decode_rejects_bad_votes() {
        let m = CodingMatrix::build(Scheme::Ovr, 3).unwrap();
        assert!(decode_label(&[1, 0], &m, DecodeRule::Masked).is_err());
        assert!(decode_label(&[1, 0, 2], &m, DecodeRule::Masked).is_err());
    }

    #[test]
    fn unanimous_vote() {
        // one reference per side: s0 reference "same", s1 reference "different"
        let v = vote_from_distances(&[0.1], &[0.4], 0.25).unwrap();
        assert_eq!((v.bit, v.votes_s0, v.votes_s1, v.tie), (0, 2, 0, false));
    }

    #[test]
    fn level_votes_fall_to_nearer_superset() {
        // both "same": one vote each side
        let v = vote_from_distances(&[0.2], &[0.1], 0.25).unwrap();
        assert_eq!((v.bit, v.tie), (1, true));
        let v = vote_from_distances(&[0.1], &[0.2], 0.25).unwrap();
        assert_eq!((v.bit, v.tie), (0, true));
        let v = vote_from_distances(&[0.1], &[0.1], 0.25).unwrap();
        assert_eq!((v.bit, v.tie), (0, true));
    }

    #[test]
    fn vote_counts() {
        let v = vote_from_distances(&[0.1, 0.3, 0.9], &[0.05, 0.2], 0.25).unwrap();
        // s0: same, diff, diff -> s0 +1, s1 +2; s1: same, same -> s1 +2
        assert_eq!((v.votes_s0, v.votes_s1, v.same, v.different, v.bit), (1, 4, 3, 2, 1));
        assert!(vote_from_distances(&[], &[0.1], 0.25).is_err());
    }

    #[test]
    fn kappa_examples() {
        assert_eq!(kappa(0.25, 0.25).unwrap(), 0.0);
        assert_eq!(kappa(1.0, 0.25).unwrap(), 1.0);
        assert!((kappa(0.58, 0.25).unwrap() - 0.44).abs() < 1e-12);
        assert!(kappa(0.5, 1.0).is_err());
    }

    #[test]
    fn confusion_counts() {
        let m = confusion_matrix(&[1, 1, 2, 3], &[1, 2, 2, 1], 3).unwrap();
        assert_eq!(m, vec![vec![1, 1, 0], vec![0, 1, 0], vec![1, 0, 0]]);
        assert!(confusion_matrix(&[4], &[1], 3).is_err());
    }
}
