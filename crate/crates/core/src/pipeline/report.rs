use serde::{Deserialize, Serialize};

use crate::dsp::CovarianceFeature;
use crate::error::{Error, Result};

use super::ensemble::{Ensemble, VoteRecord};
use super::vote::{confusion_matrix, kappa, DecodeRule};

/// Accuracy, kappa and confusion over labelled predictions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub trials: usize,
    pub classes: usize,
    pub correct: usize,
    pub accuracy: f64,
    /// `1 / classes`.
    pub chance: f64,
    pub kappa: f64,
    /// Rows are true classes, columns predictions.
    pub confusion: Vec<Vec<usize>>,
    pub decode_ties: usize,
}

/// Scores predictions against truth with chance level `1 / classes`.
pub fn summarize(truth: &[usize], predicted: &[usize], classes: usize, decode_ties: usize) -> Result<Summary> {
    if truth.is_empty() {
        return Err(Error::Degenerate("no labelled trials to score".into()));
    }
    let confusion = confusion_matrix(truth, predicted, classes)?;
    let correct = (0..classes).map(|i| confusion[i][i]).sum::<usize>();
    let accuracy = correct as f64 / truth.len() as f64;
    let chance = 1.0 / classes as f64;
    Ok(Summary {
        trials: truth.len(),
        classes,
        correct,
        accuracy,
        chance,
        kappa: kappa(accuracy, chance)?,
        confusion,
        decode_ties,
    })
}

/// One classified trial as written to the report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialLine {
    pub index: usize,
    pub true_label: Option<usize>,
    pub label: usize,
    pub bits: Vec<u8>,
    pub distances: Vec<f64>,
    pub decode_tie: bool,
    pub vote_ties: Vec<bool>,
    pub same: Vec<usize>,
    pub different: Vec<usize>,
}

impl TrialLine {
    pub fn new(index: usize, true_label: Option<usize>, r: &VoteRecord) -> Self {
        Self {
            index,
            true_label,
            label: r.label,
            bits: r.bits.clone(),
            distances: r.distances.clone(),
            decode_tie: r.decode_tie,
            vote_ties: r.columns.iter().map(|c| c.tie).collect(),
            same: r.columns.iter().map(|c| c.same).collect(),
            different: r.columns.iter().map(|c| c.different).collect(),
        }
    }
}

/// Line of the JSON-lines report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "lowercase")]
pub enum ReportLine {
    Trial(TrialLine),
    Summary(Summary),
}

/// Per-trial records plus a summary when every trial is labelled.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub trials: Vec<TrialLine>,
    pub summary: Option<Summary>,
}

impl Evaluation {
    pub fn from_records(records: &[VoteRecord], truth: &[Option<usize>], classes: usize) -> Result<Self> {
        if records.len() != truth.len() {
            return Err(Error::Shape(format!("{} records for {} trials", records.len(), truth.len())));
        }
        let trials: Vec<TrialLine> =
            records.iter().zip(truth).enumerate().map(|(i, (r, &t))| TrialLine::new(i, t, r)).collect();
        let summary = summary_of(&trials, classes)?;
        Ok(Self { trials, summary })
    }

    /// One JSON object per line: every trial, then the summary.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let lines = self
            .trials
            .iter()
            .cloned()
            .map(ReportLine::Trial)
            .chain(self.summary.clone().map(ReportLine::Summary));
        for line in lines {
            out.push_str(&serde_json::to_string(&line).expect("report lines serialise"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut trials = Vec::new();
        let mut summary = None;
        for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            match serde_json::from_str(line).map_err(|e| Error::Format(format!("report line {}: {e}", n + 1)))? {
                ReportLine::Trial(t) => trials.push(t),
                ReportLine::Summary(s) => summary = Some(s),
            }
        }
        Ok(Self { trials, summary })
    }
}

/// Summary recomputed from trial lines; `None` if any trial lacks a true label.
pub fn summary_of(trials: &[TrialLine], classes: usize) -> Result<Option<Summary>> {
    let truth: Option<Vec<usize>> = trials.iter().map(|t| t.true_label).collect();
    match truth {
        Some(truth) if !truth.is_empty() => {
            let predicted: Vec<usize> = trials.iter().map(|t| t.label).collect();
            let ties = trials.iter().filter(|t| t.decode_tie).count();
            summarize(&truth, &predicted, classes, ties).map(Some)
        }
        _ => Ok(None),
    }
}

/// Classifies every test feature and scores the labelled ones.
pub fn evaluate(ensemble: &Ensemble, test: &[CovarianceFeature], rule: DecodeRule, threads: usize) -> Result<Evaluation> {
    let records = ensemble.classify_all(test, rule, threads)?;
    let truth: Vec<Option<usize>> = test.iter().map(|f| f.label).collect();
    Evaluation::from_records(&records, &truth, ensemble.matrix.classes())
}
