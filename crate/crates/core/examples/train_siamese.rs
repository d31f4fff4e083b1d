//! Train one twin network on a single one-vs-rest column of a small
//! synthetic set, then look at the distances it learned.
//!
//! `cargo run --release --example train_siamese`

use siamese_bci::data::{synth_dataset, synth_test_dataset, SynthConfig};
use siamese_bci::decomposition::{form_supersets, generate_pairs, CodingMatrix, PairLabel, Scheme};
use siamese_bci::dsp::{CovarianceFeature, PrepConfig, Preprocessor};
use siamese_bci::siamese::{pair_distances, train, weighted_accuracy, Architecture, PairSet, SiameseNet, TrainConfig};

fn features(trials: &[siamese_bci::dsp::EegTrial], prep: &Preprocessor) -> siamese_bci::Result<Vec<CovarianceFeature>> {
    trials.iter().map(|t| prep.feature(t)).collect()
}

fn main() -> siamese_bci::Result<()> {
    let synth = SynthConfig { trials_per_class: 20, test_trials_per_class: 10, ..SynthConfig::default() };
    let prep = Preprocessor::new(PrepConfig::default(), synth.fs)?;
    let train_set = features(&synth_dataset(&synth)?, &prep)?;
    let test_set = features(&synth_test_dataset(&synth)?, &prep)?;

    let matrix = CodingMatrix::build(Scheme::Ovr, 4)?;
    let column = 0;
    let pairs = generate_pairs(&form_supersets(&train_set, &matrix, column)?)?;
    let test_pairs = generate_pairs(&form_supersets(&test_set, &matrix, column)?)?;
    println!("column {column}: {} training pairs, {} held-out pairs", pairs.len(), test_pairs.len());

    // Narrower than the default network so this runs in seconds.
    let arch = Architecture { conv_channels: vec![4, 8], dense_units: vec![64, 64], ..Architecture::default() };
    let mut model = SiameseNet::<f32>::new(arch, 0.5, 11)?;
    let config = TrainConfig { epochs: 8, batch_size: 64, lr: 1e-3, seed: 11, ..TrainConfig::default() };
    let probe = PairSet { features: &test_set, pairs: &test_pairs };
    let report = train(&mut model, &train_set, &pairs, Some(probe), &config, |r| {
        println!("epoch {:>2}  loss {:.5}  held-out pair accuracy {:.3}", r.epoch, r.mean_loss, r.pair_accuracy.unwrap_or(f64::NAN));
    })?;

    let distances = pair_distances(&model, PairSet { features: &test_set, pairs: &test_pairs })?;
    let mean = |label| {
        let d: Vec<f64> =
            test_pairs.pairs.iter().zip(&distances).filter(|(p, _)| p.label == label).map(|(_, &d)| d).collect();
        d.iter().sum::<f64>() / d.len() as f64
    };
    println!(
        "\nheld-out mean distance: similar {:.3}, dissimilar {:.3}; threshold {:.3}, weighted pair accuracy {:.3}",
        mean(PairLabel::Similar),
        mean(PairLabel::Dissimilar),
        report.threshold,
        weighted_accuracy(&distances, &test_pairs, report.threshold)
    );
    Ok(())
}
