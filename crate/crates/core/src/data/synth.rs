use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dsp::EegTrial;
use crate::error::{Error, Result};

/// Oscillation that marks one class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassBand {
    /// Centre frequency in Hz.
    pub center: f64,
    /// Each trial draws its frequency uniformly from `center +- bandwidth / 2`.
    pub bandwidth: f64,
    /// Channels (0-based) carrying the oscillation.
    pub channels: Vec<usize>,
}

/// Settings for the synthetic class-separable EEG generator.
///
/// Every trial is white Gaussian noise on all channels plus one source, a
/// sinusoid at the class frequency with slowly modulated amplitude, that
/// appears in phase on every channel of the class's group. `snr` is oscillation power over noise power on the active
/// channels; `inf` gives noise-free trials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub classes: usize,
    pub trials_per_class: usize,
    /// Size of the held-out set from [`synth_test_dataset`].
    pub test_trials_per_class: usize,
    pub n_channels: usize,
    pub n_samples: usize,
    pub fs: f64,
    pub snr: f64,
    /// Depth of the amplitude modulation, in `[0, 1)`.
    pub modulation_depth: f64,
    pub seed: u64,
    pub bands: Vec<ClassBand>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let centers = [9.0, 12.0, 20.0, 26.0];
        Self {
            classes: 4,
            trials_per_class: 60,
            test_trials_per_class: 60,
            n_channels: 22,
            n_samples: 1000,
            fs: 250.0,
            snr: 2.0,
            modulation_depth: 0.5,
            seed: 7,
            bands: centers
                .iter()
                .enumerate()
                .map(|(c, &center)| ClassBand { center, bandwidth: 2.0, channels: (5 * c..5 * c + 5).collect() })
                .collect(),
        }
    }
}

impl SynthConfig {
    pub fn problems(&self) -> Vec<String> {
        let mut p = Vec::new();
        if self.classes < 2 {
            p.push(format!("classes must be at least 2 (got {})", self.classes));
        }
        if self.bands.len() != self.classes {
            p.push(format!("{} bands given for {} classes", self.bands.len(), self.classes));
        }
        if self.trials_per_class == 0 {
            p.push("trials_per_class must be positive".into());
        }
        if self.n_channels == 0 || self.n_samples == 0 {
            p.push("n_channels and n_samples must be positive".into());
        }
        if !(self.fs > 0.0 && self.fs.is_finite()) {
            p.push(format!("fs must be positive (got {})", self.fs));
        }
        if !(self.snr > 0.0) {
            p.push(format!("snr must be positive (got {})", self.snr));
        }
        if !(0.0..1.0).contains(&self.modulation_depth) {
            p.push(format!("modulation_depth {} outside [0, 1)", self.modulation_depth));
        }
        let nyquist = self.fs / 2.0;
        for (c, b) in self.bands.iter().enumerate() {
            let (lo, hi) = (b.center - b.bandwidth / 2.0, b.center + b.bandwidth / 2.0);
            if !(b.bandwidth >= 0.0 && lo > 0.0 && hi < nyquist) {
                p.push(format!("class {} band {lo}..{hi} Hz not inside (0, {nyquist})", c + 1));
            }
            if b.channels.is_empty() {
                p.push(format!("class {} has no active channels", c + 1));
            }
            if let Some(&ch) = b.channels.iter().find(|&&ch| ch >= self.n_channels) {
                p.push(format!("class {} channel {ch} outside 0..{}", c + 1, self.n_channels));
            }
        }
        p
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.problems();
        if p.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(p))
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text).map_err(|e| Error::config(format!("synth config: {e}")))?;
        c.validate()?;
        Ok(c)
    }
}

/// Trial `index` of class `class` (1-based); a pure function of the config.
pub fn synth_trial(config: &SynthConfig, class: usize, index: usize) -> Result<EegTrial> {
    let band = config.bands.get(class.wrapping_sub(1)).ok_or_else(|| Error::config(format!("no class {class}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(((class as u64) << 32) | index as u64);

    let half = band.bandwidth / 2.0;
    let freq = band.center + if half > 0.0 { rng.random_range(-half..=half) } else { 0.0 };
    let mod_freq = rng.random_range(0.5..1.5);
    let mod_phase = rng.random_range(0.0..2.0 * PI);
    let depth = config.modulation_depth;
    // mean of (1 + depth sin)^2 sin^2 over many cycles
    let signal_power = 0.5 * (1.0 + depth * depth / 2.0);
    let noise_std = if config.snr.is_infinite() { 0.0 } else { (signal_power / config.snr).sqrt() };

    let (nc, ns) = (config.n_channels, config.n_samples);
    let mut data = vec![0.0f32; nc * ns];
    let mut active = vec![None; nc];
    for &ch in &band.channels {
        active[ch] = Some(rng.random_range(0.0..2.0 * PI));
    }
    for (ch, row) in data.chunks_mut(ns).enumerate() {
        for (t, v) in row.iter_mut().enumerate() {
            let time = t as f64 / config.fs;
            let noise: f64 = StandardNormal.sample(&mut rng);
            let mut x = noise_std * noise;
            if let Some(phase) = active[ch] {
                let envelope = 1.0 + depth * (2.0 * PI * mod_freq * time + mod_phase).sin();
                x += envelope * (2.0 * PI * freq * time + phase).sin();
            }
            *v = x as f32;
        }
    }
    EegTrial::new(data, nc, ns, config.fs, Some(class))
}

fn synth_range(config: &SynthConfig, first: usize, count: usize) -> Result<Vec<EegTrial>> {
    config.validate()?;
    (1..=config.classes)
        .flat_map(|c| (first..first + count).map(move |i| (c, i)))
        .map(|(c, i)| synth_trial(config, c, i))
        .collect()
}

/// `trials_per_class` trials of each class, class-major, cue at sample 0.
pub fn synth_dataset(config: &SynthConfig) -> Result<Vec<EegTrial>> {
    synth_range(config, 0, config.trials_per_class)
}

/// `test_trials_per_class` further trials of each class, disjoint from
/// [`synth_dataset`] and drawn from the same distribution.
pub fn synth_test_dataset(config: &SynthConfig) -> Result<Vec<EegTrial>> {
    synth_range(config, config.trials_per_class, config.test_trials_per_class)
}
