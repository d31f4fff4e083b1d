//! Multi-class EEG classification with coding-matrix ensembles of
//! contrastive twin networks.
//!
//! A trial is filtered, epoched and reduced to a trace-normalised spatial
//! covariance ([`dsp`]). A coding matrix splits the classes into two
//! supersets per column ([`decomposition`]); each column trains a twin
//! network on same/different pairs ([`siamese`]) and votes on a test trial
//! by comparing it to stored references. [`pipeline`] decodes the votes to a
//! class and scores the result.
//!
//! ```no_run
//! use siamese_bci::data::{synth_dataset, SynthConfig};
//! use siamese_bci::decomposition::{CodingMatrix, Scheme};
//! use siamese_bci::dsp::{PrepConfig, Preprocessor};
//! use siamese_bci::pipeline::{evaluate, train_ensemble, DecodeRule, EnsembleConfig};
//!
//! # fn main() -> siamese_bci::Result<()> {
//! let synth = SynthConfig::default();
//! let prep = Preprocessor::new(PrepConfig::default(), synth.fs)?;
//! let features = synth_dataset(&synth)?.iter().map(|t| prep.feature(t)).collect::<Result<Vec<_>, _>>()?;
//! let matrix = CodingMatrix::build(Scheme::Ovo, 4)?;
//! let ensemble = train_ensemble(&features, &matrix, &EnsembleConfig::default(), &|_, _| {})?;
//! let eval = evaluate(&ensemble, &features, DecodeRule::Masked, 1)?;
//! println!("{:?}", eval.summary.map(|s| s.kappa));
//! # Ok(())
//! # }
//! ```

// `!(x > 0.0)` also rejects NaN, which is the point wherever it appears.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod nn;
pub mod dsp;
pub mod decomposition;
pub mod siamese;
pub mod data;
pub mod pipeline;
pub mod cli;

pub use error::{Error, Result};
