//! Ensemble training over coding-matrix columns, voting, codeword decoding,
//! cross-validation and reporting.

mod cv;
mod ensemble;
mod report;
mod store;
mod vote;

pub use cv::{fold_assignment, kfold_cv, CvReport, FoldResult};
pub use ensemble::{
    derive_seed, train_column, train_ensemble, ColumnClassifier, Ensemble, EnsembleConfig, VoteRecord,
};
pub use report::{evaluate, summarize, summary_of, Evaluation, ReportLine, Summary, TrialLine};
pub use store::{column_file, load_ensemble, save_ensemble, ColumnEntry, Manifest, MANIFEST, REFERENCES};
pub use vote::{confusion_matrix, decode_label, kappa, vote_from_distances, ColumnVote, DecodeRule, Decoded};
