//! The whole pipeline in-process: synthesise, preprocess, train a one-vs-one
//! ensemble, classify held-out trials and save the model.
//!
//! `cargo run --release --example end_to_end [ovr|ovo]`

use siamese_bci::data::{synth_dataset, synth_test_dataset, SynthConfig};
use siamese_bci::decomposition::{CodingMatrix, Scheme};
use siamese_bci::dsp::{CovarianceFeature, PrepConfig, Preprocessor};
use siamese_bci::pipeline::{evaluate, load_ensemble, save_ensemble, train_ensemble, DecodeRule, EnsembleConfig};
use siamese_bci::siamese::{Architecture, TrainConfig};

fn main() -> siamese_bci::Result<()> {
    let scheme = match std::env::args().nth(1).as_deref() {
        Some("ovr") => Scheme::Ovr,
        _ => Scheme::Ovo,
    };
    let synth = SynthConfig { trials_per_class: 30, test_trials_per_class: 20, ..SynthConfig::default() };
    let prep = Preprocessor::new(PrepConfig::default(), synth.fs)?;
    let train_set: Vec<CovarianceFeature> = synth_dataset(&synth)?.iter().map(|t| prep.feature(t)).collect::<Result<_, _>>()?;
    let test_set: Vec<CovarianceFeature> =
        synth_test_dataset(&synth)?.iter().map(|t| prep.feature(t)).collect::<Result<_, _>>()?;

    let matrix = CodingMatrix::build(scheme, synth.classes)?;
    let config = EnsembleConfig {
        train: TrainConfig { epochs: 5, lr: 1e-3, seed: 7, pair_subsample: Some(1000), ..TrainConfig::default() },
        architecture: Architecture { conv_channels: vec![4, 8], dense_units: vec![64, 64], ..Architecture::default() },
        threads: 2,
        ..EnsembleConfig::default()
    };
    let ensemble = train_ensemble(&train_set, &matrix, &config, &|column, r| {
        if r.epoch == config.train.epochs {
            println!("column {column} done, final loss {:.4}", r.mean_loss);
        }
    })?;

    let dir = std::env::temp_dir().join("siamese-bci-end-to-end");
    let manifest = save_ensemble(&ensemble, &dir)?;
    println!("saved {} column models to {}", manifest.columns.len(), dir.display());
    let reloaded = load_ensemble(&dir)?;

    let eval = evaluate(&reloaded, &test_set, DecodeRule::Masked, 2)?;
    if let Some(s) = &eval.summary {
        println!("\n{scheme:?}: accuracy {:.3}, kappa {:.3} on {} trials", s.accuracy, s.kappa, s.trials);
        for (i, row) in s.confusion.iter().enumerate() {
            println!("  true {}: {row:?}", i + 1);
        }
    }
    Ok(())
}
