//! Ensemble checkpoint directory.
//!
//! ```text
//! <dir>/manifest.json     coding matrix, per-column model file, threshold,
//!                         reference indices and SHA-256 digests
//! <dir>/references.seeg   covariance archive of the reference features
//! <dir>/column_00.ckpt    one model checkpoint per column
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{read_archive, write_archive, Archive};
use crate::decomposition::{CodingMatrix, Scheme, SupersetSplit};
use crate::error::{Error, Result};
use crate::siamese::SiameseNet;

use super::ensemble::{ColumnClassifier, Ensemble};

pub const MANIFEST: &str = "manifest.json";
pub const REFERENCES: &str = "references.seeg";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnEntry {
    pub column: usize,
    pub model: String,
    pub model_sha256: String,
    pub threshold: f64,
    pub s0: Vec<usize>,
    pub s1: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub scheme: Scheme,
    pub matrix: Vec<Vec<u8>>,
    pub references: String,
    pub references_sha256: String,
    pub columns: Vec<ColumnEntry>,
}

pub fn column_file(column: usize) -> String {
    format!("column_{column:02}.ckpt")
}

fn sha256(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes the ensemble under `dir`, creating it if needed.
pub fn save_ensemble(ensemble: &Ensemble, dir: &Path) -> Result<Manifest> {
    fs::create_dir_all(dir)?;
    let refs = write_archive(&Archive::from_features(&ensemble.references, 0.0, ensemble.matrix.classes())?)?;
    fs::write(dir.join(REFERENCES), &refs)?;
    let mut columns = Vec::with_capacity(ensemble.classifiers.len());
    for c in &ensemble.classifiers {
        let bytes = c.model.to_checkpoint()?;
        let name = column_file(c.column);
        fs::write(dir.join(&name), &bytes)?;
        columns.push(ColumnEntry {
            column: c.column,
            model: name,
            model_sha256: sha256(&bytes),
            threshold: c.threshold,
            s0: c.s0.clone(),
            s1: c.s1.clone(),
        });
    }
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        scheme: ensemble.matrix.scheme(),
        matrix: ensemble.matrix.rows_u8(),
        references: REFERENCES.into(),
        references_sha256: sha256(&refs),
        columns,
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Format(format!("manifest: {e}")))?;
    fs::write(dir.join(MANIFEST), text + "\n")?;
    Ok(manifest)
}

fn read_checked(dir: &Path, name: &str, digest: &str) -> Result<Vec<u8>> {
    if name.contains(['/', '\\']) || name == ".." {
        return Err(Error::Format(format!("manifest entry {name:?} must be a plain file name")));
    }
    let bytes = fs::read(dir.join(name))?;
    if sha256(&bytes) != digest {
        return Err(Error::Format(format!("{name} does not match its manifest digest")));
    }
    Ok(bytes)
}

/// Reads an ensemble written by [`save_ensemble`], verifying every digest.
pub fn load_ensemble(dir: &Path) -> Result<Ensemble> {
    let text = fs::read_to_string(dir.join(MANIFEST))?;
    let m: Manifest = serde_json::from_str(&text).map_err(|e| Error::Format(format!("manifest: {e}")))?;
    if m.format_version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported manifest version {}", m.format_version)));
    }
    let matrix = CodingMatrix::from_rows(&m.matrix, m.scheme)?;
    if m.columns.len() != matrix.columns() || m.columns.iter().enumerate().any(|(j, c)| c.column != j) {
        return Err(Error::Format("manifest columns do not match the coding matrix".into()));
    }
    let references = read_archive(&read_checked(dir, &m.references, &m.references_sha256)?)?.features()?;
    let classifiers = m
        .columns
        .iter()
        .map(|c| {
            let model = SiameseNet::<f32>::from_checkpoint(&read_checked(dir, &c.model, &c.model_sha256)?)?;
            let split = SupersetSplit { column: c.column, s0: c.s0.clone(), s1: c.s1.clone() };
            ColumnClassifier::new(c.column, model, c.threshold, split, &references, Vec::new())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Ensemble { matrix, references, classifiers })
}
