//! Design the 7-30 Hz band-pass used for motor imagery and inspect it.
//!
//! `cargo run --example filter_design`

use siamese_bci::dsp::design_bandpass;

fn main() -> siamese_bci::Result<()> {
    let fs = 250.0;
    let filter = design_bandpass(5, 7.0, 30.0, fs)?;
    filter.check_stable()?;

    println!("{} second-order sections", filter.sections.len());
    for (i, s) in filter.sections.iter().enumerate() {
        println!("  section {i}: pole radius {:.4}", s.pole_radius());
    }

    println!("\n  f (Hz)   |H| (dB)");
    for f in [0.0, 3.0, 7.0, 10.0, 18.0, 30.0, 40.0, 60.0, 125.0] {
        println!("  {f:>6.1}   {:>8.2}", filter.magnitude_db(f));
    }

    // A 2 Hz drift plus a 15 Hz rhythm: only the rhythm should survive.
    let signal: Vec<f64> = (0..1000)
        .map(|t| {
            let time = t as f64 / fs;
            (2.0 * std::f64::consts::PI * 2.0 * time).sin() + 0.5 * (2.0 * std::f64::consts::PI * 15.0 * time).sin()
        })
        .collect();
    let rms = |x: &[f64]| (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt();
    let causal = filter.apply(&signal)?;
    let zero_phase = filter.apply_zero_phase(&signal)?;
    println!("\nRMS in {:.3}, causal out {:.3}, zero-phase out {:.3}", rms(&signal), rms(&causal[250..]), rms(&zero_phase[250..750]));
    Ok(())
}
