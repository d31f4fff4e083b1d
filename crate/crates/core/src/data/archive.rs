use crate::dsp::{CovarianceFeature, EegTrial};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"SEEG";
pub const VERSION: u16 = 1;
/// Bytes before the label list.
pub const HEADER_LEN: usize = 4 + 2 + 1 + 1 + 4 + 4 + 8 + 4 + 4;

/// What the per-trial blocks hold.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArchiveKind {
    /// `n_channels x n_samples` signal blocks.
    Raw,
    /// `n x n` covariance features (`n_channels == n_samples == n`).
    Covariance,
}

/// In-memory form of the trial archive.
///
/// Layout, little-endian throughout:
///
/// ```text
/// "SEEG" | u16 version | u8 kind (0 raw, 1 covariance) | u8 reserved
/// u32 n_channels | u32 n_samples | f64 fs | u32 classes | u32 count
/// u16 label * count          (0 = unlabelled)
/// f32 payload * count * n_channels * n_samples, channel-major per trial
/// ```
#[derive(Clone, Debug, PartialEq)]
pub struct Archive {
    pub kind: ArchiveKind,
    pub n_channels: usize,
    pub n_samples: usize,
    pub fs: f64,
    pub classes: usize,
    /// One per trial; 0 marks an unlabelled trial.
    pub labels: Vec<usize>,
    pub payload: Vec<f32>,
}

impl Archive {
    pub fn count(&self) -> usize {
        self.labels.len()
    }

    pub fn block_len(&self) -> usize {
        self.n_channels * self.n_samples
    }

    /// Packs trials that share one shape and sampling rate.
    pub fn from_trials(trials: &[EegTrial], classes: usize) -> Result<Self> {
        let (n_channels, n_samples, fs) = match trials.first() {
            Some(t) => (t.n_channels(), t.n_samples(), t.fs),
            None => (0, 0, 0.0),
        };
        let mut payload = Vec::with_capacity(trials.len() * n_channels * n_samples);
        let mut labels = Vec::with_capacity(trials.len());
        for (i, t) in trials.iter().enumerate() {
            if (t.n_channels(), t.n_samples()) != (n_channels, n_samples) || t.fs != fs {
                return Err(Error::Shape(format!(
                    "trial {i} is {}x{} at {} Hz, archive holds {n_channels}x{n_samples} at {fs} Hz",
                    t.n_channels(),
                    t.n_samples(),
                    t.fs
                )));
            }
            payload.extend_from_slice(t.data());
            labels.push(t.label.unwrap_or(0));
        }
        let archive = Self { kind: ArchiveKind::Raw, n_channels, n_samples, fs, classes, labels, payload };
        archive.check_labels()?;
        Ok(archive)
    }

    /// Packs covariance features; entries are stored as `f32`.
    pub fn from_features(features: &[CovarianceFeature], fs: f64, classes: usize) -> Result<Self> {
        let n = features.first().map_or(0, CovarianceFeature::size);
        let mut payload = Vec::with_capacity(features.len() * n * n);
        let mut labels = Vec::with_capacity(features.len());
        for (i, f) in features.iter().enumerate() {
            if f.size() != n {
                return Err(Error::Shape(format!("feature {i} is {0}x{0}, archive holds {n}x{n}", f.size())));
            }
            payload.extend(f.matrix().iter().map(|&v| v as f32));
            labels.push(f.label.unwrap_or(0));
        }
        let archive = Self { kind: ArchiveKind::Covariance, n_channels: n, n_samples: n, fs, classes, labels, payload };
        archive.check_labels()?;
        Ok(archive)
    }

    pub fn trials(&self) -> Result<Vec<EegTrial>> {
        if self.kind != ArchiveKind::Raw {
            return Err(Error::Format("archive holds covariance features, not raw trials".into()));
        }
        self.blocks()
            .map(|(block, label)| EegTrial::new(block.to_vec(), self.n_channels, self.n_samples, self.fs, label))
            .collect()
    }

    pub fn features(&self) -> Result<Vec<CovarianceFeature>> {
        if self.kind != ArchiveKind::Covariance {
            return Err(Error::Format("archive holds raw trials, not covariance features".into()));
        }
        self.blocks()
            .map(|(block, label)| {
                CovarianceFeature::from_matrix(block.iter().map(|&v| v as f64).collect(), self.n_channels, label)
            })
            .collect()
    }

    fn blocks(&self) -> impl Iterator<Item = (&[f32], Option<usize>)> {
        let len = self.block_len().max(1);
        self.payload.chunks(len).zip(&self.labels).map(|(b, &l)| (b, (l != 0).then_some(l)))
    }

    fn check_labels(&self) -> Result<()> {
        if let Some((i, &l)) = self.labels.iter().enumerate().find(|&(_, &l)| l > self.classes || l > u16::MAX as usize) {
            return Err(Error::Format(format!("label {l} of trial {i} outside 0..={}", self.classes)));
        }
        Ok(())
    }

    fn check(&self) -> Result<()> {
        self.check_labels()?;
        if self.payload.len() != self.count() * self.block_len() {
            return Err(Error::Format(format!(
                "payload of {} values does not hold {} blocks of {}",
                self.payload.len(),
                self.count(),
                self.block_len()
            )));
        }
        if self.kind == ArchiveKind::Covariance && self.n_channels != self.n_samples {
            return Err(Error::Format("covariance blocks must be square".into()));
        }
        Ok(())
    }
}

fn to_u32(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::Format(format!("{what} {v} does not fit the archive header")))
}

pub fn write_archive(archive: &Archive) -> Result<Vec<u8>> {
    archive.check()?;
    let mut out = Vec::with_capacity(HEADER_LEN + 2 * archive.count() + 4 * archive.payload.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(match archive.kind {
        ArchiveKind::Raw => 0,
        ArchiveKind::Covariance => 1,
    });
    out.push(0);
    out.extend_from_slice(&to_u32(archive.n_channels, "channel count")?.to_le_bytes());
    out.extend_from_slice(&to_u32(archive.n_samples, "sample count")?.to_le_bytes());
    out.extend_from_slice(&archive.fs.to_le_bytes());
    out.extend_from_slice(&to_u32(archive.classes, "class count")?.to_le_bytes());
    out.extend_from_slice(&to_u32(archive.count(), "trial count")?.to_le_bytes());
    for &l in &archive.labels {
        out.extend_from_slice(&(l as u16).to_le_bytes());
    }
    for v in &archive.payload {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            Error::Format(format!("archive truncated: need {n} bytes at offset {}, have {}", self.pos, self.bytes.len()))
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.array()?) as usize)
    }
}

pub fn read_archive(bytes: &[u8]) -> Result<Archive> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Format("not a trial archive (bad magic)".into()));
    }
    let version = u16::from_le_bytes(r.array()?);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported archive version {version}")));
    }
    let kind = match r.array::<1>()?[0] {
        0 => ArchiveKind::Raw,
        1 => ArchiveKind::Covariance,
        k => return Err(Error::Format(format!("unknown archive kind {k}"))),
    };
    r.take(1)?;
    let n_channels = r.u32()?;
    let n_samples = r.u32()?;
    let fs = f64::from_le_bytes(r.array()?);
    let classes = r.u32()?;
    let count = r.u32()?;
    let labels = (0..count).map(|_| Ok(u16::from_le_bytes(r.array()?) as usize)).collect::<Result<Vec<_>>>()?;
    let values = count
        .checked_mul(n_channels)
        .and_then(|v| v.checked_mul(n_samples))
        .ok_or_else(|| Error::Format("archive dimensions overflow".into()))?;
    let expected = values.checked_mul(4).ok_or_else(|| Error::Format("archive dimensions overflow".into()))?;
    let remaining = bytes.len() - r.pos;
    if remaining != expected {
        return Err(Error::Format(format!("payload is {remaining} bytes, header implies {expected}")));
    }
    let payload = r.take(expected)?.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes"))).collect();
    let archive = Archive { kind, n_channels, n_samples, fs, classes, labels, payload };
    archive.check()?;
    Ok(archive)
}
