use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decomposition::{form_supersets, generate_pairs, subsample_pairs, CodingMatrix, SupersetSplit};
use crate::dsp::CovarianceFeature;
use crate::error::{Error, Result};
use crate::siamese::{euclidean, train, Architecture, EpochRecord, PairSet, Precision, SiameseNet, TrainConfig};

use super::vote::{decode_label, vote_from_distances, ColumnVote, DecodeRule};

/// Everything needed to train one ensemble.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleConfig {
    pub train: TrainConfig,
    pub architecture: Architecture,
    /// Worker threads for column-parallel training and classification.
    pub threads: usize,
    /// Keep at most this many references per superset (seeded sample).
    pub reference_cap: Option<usize>,
    /// Pairs sampled from the training pairs to report pair accuracy each epoch.
    pub probe_pairs: usize,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            train: TrainConfig::default(),
            architecture: Architecture::default(),
            threads: 1,
            reference_cap: None,
            probe_pairs: 512,
        }
    }
}

impl EnsembleConfig {
    pub fn problems(&self) -> Vec<String> {
        let mut p = self.train.problems();
        if let Err(Error::Config(a)) = self.architecture.validate() {
            p.extend(a);
        }
        if self.threads == 0 {
            p.push("threads must be at least 1".into());
        }
        if self.reference_cap == Some(0) {
            p.push("reference_cap must be positive".into());
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
}

/// Independent stream for `(seed, purpose, index)`.
pub fn derive_seed(seed: u64, purpose: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose << 32 | index);
    rand::Rng::random(&mut rng)
}

const MODEL_SEED: u64 = 1;
const TRAIN_SEED: u64 = 2;
const CAP_SEED: u64 = 3;
const PROBE_SEED: u64 = 4;

/// One trained column: its model, threshold and reference supersets.
#[derive(Clone, Debug)]
pub struct ColumnClassifier {
    pub column: usize,
    pub model: SiameseNet<f32>,
    pub threshold: f64,
    /// Indices into [`Ensemble::references`].
    pub s0: Vec<usize>,
    pub s1: Vec<usize>,
    pub history: Vec<EpochRecord>,
    s0_embeddings: Vec<Vec<f32>>,
    s1_embeddings: Vec<Vec<f32>>,
}

impl ColumnClassifier {
    /// Wraps a trained model and embeds its references once.
    pub fn new(
        column: usize,
        model: SiameseNet<f32>,
        threshold: f64,
        split: SupersetSplit,
        references: &[CovarianceFeature],
        history: Vec<EpochRecord>,
    ) -> Result<Self> {
        if split.s0.is_empty() || split.s1.is_empty() {
            let side = if split.s0.is_empty() { 0 } else { 1 };
            return Err(Error::EmptySuperset { column, side });
        }
        if split.s0.iter().chain(&split.s1).any(|&i| i >= references.len()) {
            return Err(Error::Shape(format!("column {column} references past {} features", references.len())));
        }
        let embed = |idx: &[usize]| model.embed_all(&idx.iter().map(|&i| &references[i]).collect::<Vec<_>>());
        let s0_embeddings = embed(&split.s0)?;
        let s1_embeddings = embed(&split.s1)?;
        Ok(Self { column, model, threshold, s0: split.s0, s1: split.s1, history, s0_embeddings, s1_embeddings })
    }

    /// Distances from an embedded test trial to every reference, per superset.
    pub fn distances(&self, embedding: &[f32]) -> (Vec<f64>, Vec<f64>) {
        let d = |set: &[Vec<f32>]| set.iter().map(|r| euclidean(embedding, r)).collect();
        (d(&self.s0_embeddings), d(&self.s1_embeddings))
    }

    /// Bit for one test trial.
    pub fn vote(&self, z: &CovarianceFeature) -> Result<ColumnVote> {
        let e = self.model.embed(z)?;
        let (d0, d1) = self.distances(&e);
        vote_from_distances(&d0, &d1, self.threshold)
    }
}

/// Per-column Siamese classifiers over a coding matrix.
#[derive(Clone, Debug)]
pub struct Ensemble {
    pub matrix: CodingMatrix,
    /// Training features kept for pairing with unseen trials.
    pub references: Vec<CovarianceFeature>,
    pub classifiers: Vec<ColumnClassifier>,
}

/// Outcome of classifying one trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VoteRecord {
    pub bits: Vec<u8>,
    pub columns: Vec<ColumnVote>,
    /// 1-based.
    pub label: usize,
    pub distances: Vec<f64>,
    pub decode_tie: bool,
}

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::config(format!("thread pool: {e}")))
}

fn capped(split: SupersetSplit, cap: Option<usize>, seed: u64) -> SupersetSplit {
    let Some(cap) = cap else { return split };
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, CAP_SEED, split.column as u64));
    let mut pick = |v: Vec<usize>| {
        if v.len() <= cap {
            return v;
        }
        let mut keep: Vec<usize> = index::sample(&mut rng, v.len(), cap).into_iter().map(|i| v[i]).collect();
        keep.sort_unstable();
        keep
    };
    let s0 = pick(split.s0);
    let s1 = pick(split.s1);
    SupersetSplit { column: split.column, s0, s1 }
}

/// Trains one column; seeds depend only on the base seed and the column index.
pub fn train_column(
    features: &[CovarianceFeature],
    matrix: &CodingMatrix,
    column: usize,
    config: &EnsembleConfig,
    progress: &(dyn Fn(usize, &EpochRecord) + Sync),
) -> Result<ColumnClassifier> {
    let split = form_supersets(features, matrix, column)?;
    let pairs = generate_pairs(&split)?;
    let base = config.train.seed;
    let mut probe_rng = ChaCha8Rng::seed_from_u64(derive_seed(base, PROBE_SEED, column as u64));
    let probe = subsample_pairs(&pairs, config.probe_pairs.max(1), &mut probe_rng)?;
    let probe_set = (config.probe_pairs > 0).then_some(PairSet { features, pairs: &probe });
    let train_config = TrainConfig { seed: derive_seed(base, TRAIN_SEED, column as u64), ..config.train.clone() };
    let model_seed = derive_seed(base, MODEL_SEED, column as u64);
    let arch = config.architecture.clone();
    let log = |r: &EpochRecord| progress(column, r);
    let (model, report) = match config.train.precision {
        Precision::F32 => {
            let mut m = SiameseNet::<f32>::new(arch, train_config.margin, model_seed)?;
            let report = train(&mut m, features, &pairs, probe_set, &train_config, log)?;
            (m, report)
        }
        Precision::F64 => {
            let mut m = SiameseNet::<f64>::new(arch, train_config.margin, model_seed)?;
            let report = train(&mut m, features, &pairs, probe_set, &train_config, log)?;
            (m.cast::<f32>(), report)
        }
    };
    let split = capped(split, config.reference_cap, base);
    ColumnClassifier::new(column, model, report.threshold, split, features, report.history)
}

/// One classifier per coding-matrix column, trained in parallel over columns.
///
/// Results do not depend on the thread count: each column draws its seeds
/// from the base seed and its own index.
pub fn train_ensemble(
    features: &[CovarianceFeature],
    matrix: &CodingMatrix,
    config: &EnsembleConfig,
    progress: &(dyn Fn(usize, &EpochRecord) + Sync),
) -> Result<Ensemble> {
    config.validate()?;
    matrix.validate()?;
    let mut present: Vec<usize> = features.iter().filter_map(|f| f.label).collect();
    present.sort_unstable();
    present.dedup();
    if present.len() < 2 {
        return Err(Error::Degenerate(format!("training needs at least 2 classes, found {}", present.len())));
    }
    let classifiers = pool(config.threads)?.install(|| {
        (0..matrix.columns())
            .into_par_iter()
            .map(|j| train_column(features, matrix, j, config, progress))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(Ensemble { matrix: matrix.clone(), references: features.to_vec(), classifiers })
}

impl Ensemble {
    pub fn classify(&self, z: &CovarianceFeature, rule: DecodeRule) -> Result<VoteRecord> {
        let columns = self.classifiers.iter().map(|c| c.vote(z)).collect::<Result<Vec<_>>>()?;
        self.record(columns, rule)
    }

    /// [`Ensemble::classify`] for many trials, parallel over columns.
    pub fn classify_all(&self, zs: &[CovarianceFeature], rule: DecodeRule, threads: usize) -> Result<Vec<VoteRecord>> {
        let refs: Vec<&CovarianceFeature> = zs.iter().collect();
        let per_column = pool(threads)?.install(|| {
            self.classifiers
                .par_iter()
                .map(|c| {
                    c.model
                        .embed_all(&refs)?
                        .iter()
                        .map(|e| {
                            let (d0, d1) = c.distances(e);
                            vote_from_distances(&d0, &d1, c.threshold)
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()
        })?;
        (0..zs.len())
            .map(|i| self.record(per_column.iter().map(|col| col[i].clone()).collect(), rule))
            .collect()
    }

    fn record(&self, columns: Vec<ColumnVote>, rule: DecodeRule) -> Result<VoteRecord> {
        let bits: Vec<u8> = columns.iter().map(|v| v.bit).collect();
        let d = decode_label(&bits, &self.matrix, rule)?;
        Ok(VoteRecord { bits, columns, label: d.label, distances: d.distances, decode_tie: d.tie })
    }
}
