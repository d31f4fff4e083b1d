use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::SynthConfig;
use crate::decomposition::{CodingMatrix, Scheme};
use crate::dsp::{EpochWindow, PrepConfig};
use crate::error::{Error, Result};
use crate::pipeline::{DecodeRule, EnsembleConfig};
use crate::siamese::{Architecture, TrainConfig};

/// File locations used by the subcommands; each can also be given as a flag.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub raw: Option<PathBuf>,
    pub test_raw: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub test_features: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub cv_report: Option<PathBuf>,
}

/// Preprocessing block of the run config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrepSection {
    pub filter_order: usize,
    pub f_lo: f64,
    pub f_hi: f64,
    pub zero_phase: bool,
    /// Cut `[epoch_start, epoch_end)` seconds after the cue; off keeps whole trials.
    pub epoch: bool,
    pub epoch_start: f64,
    pub epoch_end: f64,
    /// Remove each channel's mean before the Gram matrix.
    pub center: bool,
}

impl Default for PrepSection {
    fn default() -> Self {
        let p = PrepConfig::default();
        let w = EpochWindow::default();
        Self {
            filter_order: p.filter_order,
            f_lo: p.f_lo,
            f_hi: p.f_hi,
            zero_phase: p.zero_phase,
            epoch: true,
            epoch_start: w.t_start,
            epoch_end: w.t_end,
            center: p.center,
        }
    }
}

impl PrepSection {
    pub fn to_prep_config(&self) -> PrepConfig {
        PrepConfig {
            filter_order: self.filter_order,
            f_lo: self.f_lo,
            f_hi: self.f_hi,
            zero_phase: self.zero_phase,
            window: self.epoch.then_some(EpochWindow { t_start: self.epoch_start, t_end: self.epoch_end }),
            center: self.center,
        }
    }

    fn problems(&self) -> Vec<String> {
        let mut p = Vec::new();
        if self.filter_order == 0 {
            p.push("prep.filter_order must be at least 1".into());
        }
        if !(self.f_lo > 0.0 && self.f_lo < self.f_hi && self.f_hi.is_finite()) {
            p.push(format!("prep band {}..{} Hz must satisfy 0 < f_lo < f_hi", self.f_lo, self.f_hi));
        }
        if self.epoch && !(self.epoch_start >= 0.0 && self.epoch_start < self.epoch_end) {
            p.push(format!("prep epoch window {}..{} s must satisfy 0 <= start < end", self.epoch_start, self.epoch_end));
        }
        p
    }
}

/// The single structured config file; command-line flags override it.
///
/// `seed` drives synthesis, splitting and training alike, replacing any seed
/// given inside the `synth` and `train` sections.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub threads: usize,
    /// `ovr`, `ovo`, or a path to a coding-matrix file.
    pub scheme: String,
    pub literal_l1: bool,
    pub folds: usize,
    pub reference_cap: Option<usize>,
    pub probe_pairs: usize,
    pub paths: Paths,
    pub synth: SynthConfig,
    pub prep: PrepSection,
    pub train: TrainConfig,
    pub architecture: Architecture,
}

impl Default for RunConfig {
    fn default() -> Self {
        let e = EnsembleConfig::default();
        Self {
            seed: 7,
            threads: 1,
            scheme: "ovr".into(),
            literal_l1: false,
            folds: 5,
            reference_cap: e.reference_cap,
            probe_pairs: e.probe_pairs,
            paths: Paths::default(),
            synth: SynthConfig::default(),
            prep: PrepSection::default(),
            train: e.train,
            architecture: e.architecture,
        }
    }
}

/// Where the coding matrix comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum SchemeChoice {
    Builtin(Scheme),
    File(PathBuf),
}

impl SchemeChoice {
    pub fn parse(text: &str) -> Self {
        match text.to_ascii_lowercase().as_str() {
            "ovr" => SchemeChoice::Builtin(Scheme::Ovr),
            "ovo" => SchemeChoice::Builtin(Scheme::Ovo),
            _ => SchemeChoice::File(PathBuf::from(text)),
        }
    }

    /// Matrix for `classes` classes; a file must agree on the class count.
    pub fn matrix(&self, classes: usize) -> Result<CodingMatrix> {
        match self {
            SchemeChoice::Builtin(s) => CodingMatrix::build(*s, classes),
            SchemeChoice::File(path) => {
                let m = CodingMatrix::parse(&std::fs::read_to_string(path)?)?;
                if m.classes() != classes {
                    return Err(Error::CodingMatrix(format!(
                        "{} has {} rows but the data has {classes} classes",
                        path.display(),
                        m.classes()
                    )));
                }
                Ok(m)
            }
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(format!("config: {}", e.message())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Every violated constraint across all sections.
    pub fn problems(&self) -> Vec<String> {
        let mut p = Vec::new();
        if self.threads == 0 {
            p.push("threads must be at least 1".into());
        }
        if self.folds < 2 {
            p.push(format!("folds must be at least 2 (got {})", self.folds));
        }
        if let SchemeChoice::File(path) = SchemeChoice::parse(&self.scheme) {
            if !path.is_file() {
                p.push(format!("scheme {:?} is neither ovr, ovo nor a readable matrix file", self.scheme));
            }
        }
        p.extend(self.synth().problems().into_iter().map(|s| format!("synth: {s}")));
        p.extend(self.prep.problems());
        p.extend(self.ensemble().problems());
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

    pub fn synth(&self) -> SynthConfig {
        SynthConfig { seed: self.seed, ..self.synth.clone() }
    }

    pub fn ensemble(&self) -> EnsembleConfig {
        EnsembleConfig {
            train: TrainConfig { seed: self.seed, ..self.train.clone() },
            architecture: self.architecture.clone(),
            threads: self.threads,
            reference_cap: self.reference_cap,
            probe_pairs: self.probe_pairs,
        }
    }

    pub fn scheme_choice(&self) -> SchemeChoice {
        SchemeChoice::parse(&self.scheme)
    }

    pub fn decode_rule(&self) -> DecodeRule {
        if self.literal_l1 {
            DecodeRule::Literal
        } else {
            DecodeRule::Masked
        }
    }
}
