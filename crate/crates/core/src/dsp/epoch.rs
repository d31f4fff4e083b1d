use crate::error::{Error, Result};

use super::EegTrial;

/// Epoch window relative to a cue onset, in seconds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochWindow {
    pub t_start: f64,
    pub t_end: f64,
}

impl Default for EpochWindow {
    fn default() -> Self {
        Self { t_start: 0.5, t_end: 2.5 }
    }
}

impl EpochWindow {
    /// `(offset, length)` in samples at rate `fs`.
    pub fn samples(&self, fs: f64) -> Result<(i64, usize)> {
        let len = ((self.t_end - self.t_start) * fs).round();
        if !(len >= 1.0) {
            return Err(Error::Degenerate(format!(
                "epoch window [{}, {}) s is empty at {fs} Hz",
                self.t_start, self.t_end
            )));
        }
        Ok(((self.t_start * fs).round() as i64, len as usize))
    }
}

/// Cuts one epoch per cue onset (sample index) from a continuous recording.
///
/// Windows that fall outside the recording yield an error in their slot
/// without affecting the others. `labels`, when given, is parallel to `onsets`.
pub fn epoch_extract(
    recording: &EegTrial,
    onsets: &[usize],
    labels: Option<&[usize]>,
    window: EpochWindow,
) -> Result<Vec<Result<EegTrial>>> {
    let (offset, len) = window.samples(recording.fs)?;
    if let Some(l) = labels {
        if l.len() != onsets.len() {
            return Err(Error::Shape(format!("{} labels for {} onsets", l.len(), onsets.len())));
        }
    }
    Ok(onsets
        .iter()
        .enumerate()
        .map(|(i, &onset)| {
            let start = onset as i64 + offset;
            let end = start + len as i64;
            if start < 0 || end > recording.n_samples() as i64 {
                return Err(Error::EpochBounds { start, end, len: recording.n_samples() });
            }
            let mut epoch = recording.slice(start as usize, end as usize)?;
            epoch.label = labels.map(|l| l[i]);
            Ok(epoch)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(n_ch: usize, n: usize) -> EegTrial {
        let data = (0..n_ch * n).map(|i| (i % n) as f32 + (i / n) as f32 * 0.25).collect();
        EegTrial::new(data, n_ch, n, 250.0, None).unwrap()
    }

    #[test]
    fn default_window_indices() {
        let rec = ramp(2, 3000);
        let epochs = epoch_extract(&rec, &[1000, 2000], None, EpochWindow::default()).unwrap();
        assert_eq!(epochs.len(), 2);
        let first = epochs[0].as_ref().unwrap();
        assert_eq!(first.n_samples(), 500);
        assert_eq!(first.channel(0)[0], 1125.0);
        assert_eq!(first.channel(0)[499], 1624.0);
        let second = epochs[1].as_ref().unwrap();
        assert_eq!(second.channel(0)[0], 2125.0);
        assert_eq!(second.channel(0)[499], 2624.0);
    }

    #[test]
    fn epochs_are_exact_views() {
        let rec = ramp(3, 2000);
        let e = epoch_extract(&rec, &[100], Some(&[2]), EpochWindow::default()).unwrap().remove(0).unwrap();
        assert_eq!(e.label, Some(2));
        for ch in 0..3 {
            assert_eq!(e.channel(ch), &rec.channel(ch)[225..725]);
        }
    }

    #[test]
    fn empty_window_rejected() {
        let rec = ramp(1, 1000);
        let w = EpochWindow { t_start: 1.0, t_end: 1.0 };
        assert!(matches!(epoch_extract(&rec, &[0], None, w), Err(Error::Degenerate(_))));
    }

    #[test]
    fn out_of_bounds_is_per_epoch() {
        let rec = ramp(1, 1000);
        let epochs = epoch_extract(&rec, &[100, 600], None, EpochWindow::default()).unwrap();
        assert!(epochs[0].is_ok());
        assert!(matches!(epochs[1], Err(Error::EpochBounds { .. })));
    }
}
