use crate::error::{Error, Result};

/// One multichannel block of samples, stored channel-major (`data[ch * n_samples + t]`).
///
/// Used both for labelled epochs and for continuous recordings that are cut
/// into epochs.
#[derive(Clone, Debug, PartialEq)]
pub struct EegTrial {
    data: Vec<f32>,
    n_channels: usize,
    n_samples: usize,
    /// Sampling rate in Hz.
    pub fs: f64,
    /// Class index in `1..=K`, or `None` when unlabelled.
    pub label: Option<usize>,
}

impl EegTrial {
    pub fn new(data: Vec<f32>, n_channels: usize, n_samples: usize, fs: f64, label: Option<usize>) -> Result<Self> {
        if n_channels == 0 || n_samples == 0 {
            return Err(Error::Shape(format!("trial must be non-empty, got {n_channels}x{n_samples}")));
        }
        if data.len() != n_channels * n_samples {
            return Err(Error::Shape(format!(
                "{} samples cannot form a {n_channels}x{n_samples} trial",
                data.len()
            )));
        }
        if !(fs > 0.0 && fs.is_finite()) {
            return Err(Error::Shape(format!("sampling rate {fs} must be positive")));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Degenerate("trial contains non-finite samples".into()));
        }
        if label == Some(0) {
            return Err(Error::Shape("class labels start at 1".into()));
        }
        Ok(Self { data, n_channels, n_samples, fs, label })
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn channel(&self, ch: usize) -> &[f32] {
        &self.data[ch * self.n_samples..(ch + 1) * self.n_samples]
    }

    pub fn channels(&self) -> impl Iterator<Item = &[f32]> {
        self.data.chunks(self.n_samples)
    }

    /// Copy of the sample range `[start, end)` on every channel.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.n_samples {
            return Err(Error::EpochBounds { start: start as i64, end: end as i64, len: self.n_samples });
        }
        let data = self.channels().flat_map(|c| c[start..end].iter().copied()).collect();
        Ok(Self { data, n_channels: self.n_channels, n_samples: end - start, fs: self.fs, label: self.label })
    }

    pub(crate) fn with_data(&self, data: Vec<f32>) -> Self {
        debug_assert_eq!(data.len(), self.data.len());
        Self { data, ..self.clone() }
    }
}
