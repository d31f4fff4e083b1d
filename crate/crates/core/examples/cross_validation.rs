//! Stratified k-fold cross-validation of a small one-vs-rest ensemble.
//!
//! `cargo run --release --example cross_validation`

use siamese_bci::data::{synth_dataset, SynthConfig};
use siamese_bci::decomposition::{CodingMatrix, Scheme};
use siamese_bci::dsp::{CovarianceFeature, PrepConfig, Preprocessor};
use siamese_bci::pipeline::{fold_assignment, kfold_cv, DecodeRule, EnsembleConfig};
use siamese_bci::siamese::{Architecture, TrainConfig};

fn main() -> siamese_bci::Result<()> {
    let synth = SynthConfig { trials_per_class: 15, ..SynthConfig::default() };
    let prep = Preprocessor::new(PrepConfig::default(), synth.fs)?;
    let features: Vec<CovarianceFeature> = synth_dataset(&synth)?.iter().map(|t| prep.feature(t)).collect::<Result<_, _>>()?;
    let labels: Vec<usize> = features.iter().filter_map(|f| f.label).collect();

    let folds = 3;
    for (i, fold) in fold_assignment(&labels, folds, 5)?.iter().enumerate() {
        let per_class: Vec<usize> = (1..=4).map(|c| fold.iter().filter(|&&t| labels[t] == c).count()).collect();
        println!("fold {i}: {} trials, per class {per_class:?}", fold.len());
    }

    let config = EnsembleConfig {
        train: TrainConfig { epochs: 4, lr: 1e-3, seed: 5, ..TrainConfig::default() },
        architecture: Architecture { conv_channels: vec![4, 8], dense_units: vec![32, 32], ..Architecture::default() },
        ..EnsembleConfig::default()
    };
    let matrix = CodingMatrix::build(Scheme::Ovr, synth.classes)?;
    let report = kfold_cv(&features, folds, &matrix, &config, DecodeRule::Masked, &|_, _, _| {})?;
    for f in &report.folds {
        println!("fold {}: trained on {}, accuracy {:.3}, kappa {:.3}", f.fold, f.train_trials, f.summary.accuracy, f.summary.kappa);
    }
    println!(
        "\naccuracy {:.3} ± {:.3}, kappa {:.3} ± {:.3}, pooled accuracy {:.3}",
        report.mean_accuracy, report.std_accuracy, report.mean_kappa, report.std_kappa, report.pooled_accuracy
    );
    Ok(())
}
