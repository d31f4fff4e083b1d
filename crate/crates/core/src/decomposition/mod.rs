//! Binary decomposition of a K-class problem: coding matrices, superset
//! formation per column, exhaustive contrastive pairs and their class weights.

mod coding;
mod pairs;

pub use coding::{Code, CodingMatrix, Scheme};
pub use pairs::{
    class_weights, form_supersets, generate_pairs, split_labels, subsample_pairs, Pair, PairBatch, PairLabel,
    SupersetSplit,
};
