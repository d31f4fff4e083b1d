//! Write raw trials and covariance features to the binary archive format and
//! read them back.
//!
//! `cargo run --example archive_roundtrip`

use siamese_bci::data::{read_archive, synth_dataset, write_archive, Archive, SynthConfig, HEADER_LEN};
use siamese_bci::dsp::{PrepConfig, Preprocessor};

fn main() -> siamese_bci::Result<()> {
    let synth = SynthConfig { trials_per_class: 3, ..SynthConfig::default() };
    let trials = synth_dataset(&synth)?;

    let raw = Archive::from_trials(&trials, synth.classes)?;
    let bytes = write_archive(&raw)?;
    let back = read_archive(&bytes)?;
    println!(
        "raw archive: {:?}, {} trials of {}x{}, {} bytes ({HEADER_LEN}-byte header), labels {:?}",
        back.kind,
        back.count(),
        back.n_channels,
        back.n_samples,
        bytes.len(),
        back.labels
    );
    let restored = back.trials()?;
    println!("first sample survives: {} == {}", trials[0].channel(0)[0], restored[0].channel(0)[0]);

    let prep = Preprocessor::new(PrepConfig::default(), synth.fs)?;
    let features = trials.iter().map(|t| prep.feature(t)).collect::<siamese_bci::Result<Vec<_>>>()?;
    let archived = read_archive(&write_archive(&Archive::from_features(&features, synth.fs, synth.classes)?)?)?;
    let reloaded = archived.features()?;
    let worst = features
        .iter()
        .zip(&reloaded)
        .flat_map(|(a, b)| a.matrix().iter().zip(b.matrix()).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max);
    println!("feature archive: {:?}, {} matrices, largest change from f32 storage {worst:.2e}", archived.kind, reloaded.len());

    match read_archive(&bytes[..HEADER_LEN + 10]) {
        Ok(_) => println!("truncated archive unexpectedly parsed"),
        Err(e) => println!("truncated archive rejected: {e}"),
    }
    Ok(())
}
