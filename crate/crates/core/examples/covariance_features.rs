//! From a raw synthetic trial to the trace-normalised spatial covariance
//! that the network consumes.
//!
//! `cargo run --example covariance_features`

use siamese_bci::data::{synth_trial, SynthConfig};
use siamese_bci::dsp::{covariance_feature, PrepConfig, Preprocessor};

fn main() -> siamese_bci::Result<()> {
    let config = SynthConfig::default();
    let prep = Preprocessor::new(PrepConfig::default(), config.fs)?;

    for class in 1..=config.classes {
        let trial = synth_trial(&config, class, 0)?;
        let z = prep.feature(&trial)?;
        let n = z.size();
        // Diagonal mass per channel group shows where each class puts its power.
        let group_power: Vec<f64> = (0..5).map(|g| (5 * g..(5 * g + 5).min(n)).map(|c| z.get(c, c)).sum()).collect();
        println!(
            "class {class}: {n}x{n}, trace {:.6}, power by channel group {:.3?}",
            z.trace(),
            group_power
        );
    }

    // Raw (unfiltered, unwindowed) covariance for comparison.
    let raw = covariance_feature(&synth_trial(&config, 1, 0)?, false)?;
    println!("\nunfiltered class 1 trial, C[0][0] = {:.4}, C[0][1] = {:.4}", raw.get(0, 0), raw.get(0, 1));
    Ok(())
}
