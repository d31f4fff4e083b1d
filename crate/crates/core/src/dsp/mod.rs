//! Signal preprocessing: Butterworth bandpass design and filtering, epoch
//! extraction around cue onsets, and trace-normalised covariance features.

mod covariance;
mod epoch;
mod filter;
mod trial;

pub use covariance::{covariance_feature, CovarianceFeature};
pub use epoch::{epoch_extract, EpochWindow};
pub use filter::{design_bandpass, Biquad, SosFilter};
pub use trial::EegTrial;

use crate::error::Result;

/// Settings for turning raw trials into covariance features.
#[derive(Clone, Debug, PartialEq)]
pub struct PrepConfig {
    pub filter_order: usize,
    pub f_lo: f64,
    pub f_hi: f64,
    pub zero_phase: bool,
    /// Window relative to a cue at sample 0 of each raw trial. `None` keeps
    /// the whole trial (for data that is already epoched).
    pub window: Option<EpochWindow>,
    pub center: bool,
}

impl Default for PrepConfig {
    fn default() -> Self {
        Self { filter_order: 5, f_lo: 7.0, f_hi: 30.0, zero_phase: false, window: Some(EpochWindow::default()), center: false }
    }
}

/// Filter, cut and reduce raw trials to covariance features.
///
/// The filter runs over the full raw trial before the epoch is cut, so its
/// start-up transient falls outside the window when the trial has lead-in.
#[derive(Clone, Debug)]
pub struct Preprocessor {
    config: PrepConfig,
    filter: SosFilter,
}

impl Preprocessor {
    pub fn new(config: PrepConfig, fs: f64) -> Result<Self> {
        let filter = design_bandpass(config.filter_order, config.f_lo, config.f_hi, fs)?;
        Ok(Self { config, filter })
    }

    pub fn filter(&self) -> &SosFilter {
        &self.filter
    }

    pub fn epoch(&self, trial: &EegTrial) -> Result<EegTrial> {
        let filtered = self.filter.apply_trial(trial, self.config.zero_phase)?;
        match self.config.window {
            Some(w) => epoch_extract(&filtered, &[0], trial.label.map(|l| vec![l]).as_deref(), w)?.remove(0),
            None => Ok(filtered),
        }
    }

    pub fn feature(&self, trial: &EegTrial) -> Result<CovarianceFeature> {
        covariance_feature(&self.epoch(trial)?, self.config.center)
    }
}
