//! Twin embedding network, contrastive loss and its training loop.

mod loss;
mod model;
mod train;

pub use loss::{contrastive_loss, pair_loss, ContrastiveHead, PairLoss};
pub use model::{euclidean, predict_pair, Architecture, PairPrediction, SiameseNet};
pub use train::{
    calibrate_threshold, pair_distances, train, weighted_accuracy, EpochRecord, PairSet, Precision, TrainConfig,
    TrainReport,
};
