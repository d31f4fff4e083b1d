//! Trial archives, the synthetic EEG generator and stratified splits.

mod archive;
mod split;
mod synth;

pub use archive::{read_archive, write_archive, Archive, ArchiveKind, HEADER_LEN, MAGIC, VERSION};
pub use split::{stratified_split, SplitSpec};
pub use synth::{synth_dataset, synth_test_dataset, synth_trial, ClassBand, SynthConfig};
