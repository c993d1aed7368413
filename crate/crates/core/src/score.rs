//! Accuracy scoring for binary triple validity and trivial baselines.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::dataset::{Prediction, Sample};
use crate::forge::Label;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScoreError {
    #[error("duplicate prediction id `{0}`")]
    DuplicatePrediction(String),
    #[error("gold corpus is empty")]
    EmptyGold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Confusion {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub n: usize,
    pub accuracy: f64,
    pub confusion: Confusion,
    /// Gold ids with no prediction; each counts as an error.
    pub missing_ids: Vec<String>,
    /// Predicted ids absent from gold; ignored for accuracy.
    pub extra_ids: Vec<String>,
}

impl EvalReport {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "accuracy\t{:.4}", self.accuracy)?;
        writeln!(f, "n\t{}", self.n)?;
        let c = &self.confusion;
        writeln!(f, "tp\t{}\ttn\t{}\tfp\t{}\tfn\t{}", c.tp, c.tn, c.fp, c.fn_)?;
        writeln!(f, "missing\t{}", self.missing_ids.len())?;
        for id in &self.missing_ids {
            writeln!(f, "missing_id\t{id}")?;
        }
        writeln!(f, "extra\t{}", self.extra_ids.len())?;
        for id in &self.extra_ids {
            writeln!(f, "extra_id\t{id}")?;
        }
        Ok(())
    }
}

/// Pairs predictions with gold samples by id. A missing prediction is
/// scored as the wrong label.
pub fn score(gold: &[Sample], preds: &[Prediction]) -> Result<EvalReport, ScoreError> {
    if gold.is_empty() {
        return Err(ScoreError::EmptyGold);
    }
    let mut by_id: BTreeMap<&str, Label> = BTreeMap::new();
    for p in preds {
        if by_id.insert(p.id.as_str(), p.pred).is_some() {
            return Err(ScoreError::DuplicatePrediction(p.id.clone()));
        }
    }
    let mut confusion = Confusion::default();
    let mut missing_ids = Vec::new();
    let mut gold_ids = BTreeSet::new();
    for sample in gold {
        gold_ids.insert(sample.id.as_str());
        let pred = match by_id.get(sample.id.as_str()) {
            Some(&p) => p,
            None => {
                missing_ids.push(sample.id.clone());
                sample.label.flipped()
            }
        };
        match (sample.label, pred) {
            (Label::Valid, Label::Valid) => confusion.tp += 1,
            (Label::Invalid, Label::Invalid) => confusion.tn += 1,
            (Label::Invalid, Label::Valid) => confusion.fp += 1,
            (Label::Valid, Label::Invalid) => confusion.fn_ += 1,
        }
    }
    let extra_ids = by_id
        .keys()
        .filter(|id| !gold_ids.contains(*id))
        .map(|id| id.to_string())
        .collect();
    let n = gold.len();
    Ok(EvalReport {
        n,
        accuracy: (confusion.tp + confusion.tn) as f64 / n as f64,
        confusion,
        missing_ids,
        extra_ids,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    /// The more frequent gold label; ties go to valid.
    Majority,
    /// Seeded fair coin.
    Random,
}

impl std::str::FromStr for BaselineKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "majority" => Ok(BaselineKind::Majority),
            "random" => Ok(BaselineKind::Random),
            other => Err(format!("unknown baseline `{other}`")),
        }
    }
}

pub fn baseline(kind: BaselineKind, gold: &[Sample], seed: u64) -> Vec<Prediction> {
    match kind {
        BaselineKind::Majority => {
            let positives = gold.iter().filter(|s| s.label == Label::Valid).count();
            let pred = Label::from(positives * 2 >= gold.len());
            gold.iter()
                .map(|s| Prediction {
                    id: s.id.clone(),
                    pred,
                })
                .collect()
        }
        BaselineKind::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            gold.iter()
                .map(|s| Prediction {
                    id: s.id.clone(),
                    pred: Label::from(rng.gen_bool(0.5)),
                })
                .collect()
        }
    }
}
