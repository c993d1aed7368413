//! JSONL corpora: samples, ART records, predictions, splitting and statistics.

use std::collections::BTreeSet;
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::forge::{AbductiveTriple, Label, Provenance};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: duplicate id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: unknown label value {value}")]
    UnknownLabel { line: usize, value: i64 },
    #[error("line {line}: gold choice {value} is not 1 or 2")]
    BadGoldChoice { line: usize, value: i64 },
    #[error("invalid split ratios: {0}")]
    BadRatios(String),
    #[error("split `{0}` would be empty")]
    EmptySplit(&'static str),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// One rendered αNLI* record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    pub obs1: String,
    pub obs2: String,
    pub hyp: String,
    pub label: Label,
    pub provenance: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CharLengths {
    pub obs1: usize,
    pub obs2: usize,
    pub hyp: usize,
}

impl Sample {
    pub fn char_lengths(&self) -> CharLengths {
        CharLengths {
            obs1: self.obs1.chars().count(),
            obs2: self.obs2.chars().count(),
            hyp: self.hyp.chars().count(),
        }
    }
}

pub trait Labeled {
    fn label(&self) -> Label;
}

impl Labeled for Sample {
    fn label(&self) -> Label {
        self.label
    }
}

impl Labeled for AbductiveTriple {
    fn label(&self) -> Label {
        self.label
    }
}

impl Labeled for Label {
    fn label(&self) -> Label {
        *self
    }
}

/// Loose mirror of [`Sample`] so label problems get their own error.
#[derive(Deserialize)]
struct RawSample {
    id: String,
    obs1: String,
    obs2: String,
    hyp: String,
    label: i64,
    provenance: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtRecord {
    pub obs1: String,
    pub obs2: String,
    pub hyp1: String,
    pub hyp2: String,
    /// Gold hypothesis, 1 or 2.
    pub label: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub pred: Label,
}

#[derive(Deserialize)]
struct RawPrediction {
    id: String,
    pred: i64,
}

/// Calls `f(line_number, line)` for every nonblank line.
fn for_each_line(
    path: &Path,
    mut f: impl FnMut(usize, &str) -> Result<(), DatasetError>,
) -> Result<(), DatasetError> {
    let file = File::open(path).map_err(io_err(path))?;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        f(i + 1, &line)?;
    }
    Ok(())
}

fn parse_line<T: DeserializeOwned>(line_no: usize, line: &str) -> Result<T, DatasetError> {
    serde_json::from_str(line).map_err(|e| DatasetError::Malformed {
        line: line_no,
        message: e.to_string(),
    })
}

/// Writes one JSON object per line; returns the number of records written.
pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<usize, DatasetError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    for record in records {
        let line = serde_json::to_string(record).expect("records serialize");
        writeln!(out, "{line}").map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))?;
    Ok(records.len())
}

pub fn write_samples(samples: &[Sample], path: &Path) -> Result<usize, DatasetError> {
    write_jsonl(path, samples)
}

pub fn read_samples(path: &Path) -> Result<Vec<Sample>, DatasetError> {
    let mut out = Vec::new();
    let mut ids = BTreeSet::new();
    for_each_line(path, |line_no, line| {
        let raw: RawSample = parse_line(line_no, line)?;
        let label = u8::try_from(raw.label)
            .ok()
            .and_then(Label::from_u8)
            .ok_or(DatasetError::UnknownLabel {
                line: line_no,
                value: raw.label,
            })?;
        if !ids.insert(raw.id.clone()) {
            return Err(DatasetError::DuplicateId {
                line: line_no,
                id: raw.id,
            });
        }
        out.push(Sample {
            id: raw.id,
            obs1: raw.obs1,
            obs2: raw.obs2,
            hyp: raw.hyp,
            label,
            provenance: raw.provenance,
        });
        Ok(())
    })?;
    Ok(out)
}

pub fn read_triples(path: &Path) -> Result<Vec<AbductiveTriple>, DatasetError> {
    let mut out: Vec<AbductiveTriple> = Vec::new();
    let mut ids = BTreeSet::new();
    for_each_line(path, |line_no, line| {
        let triple: AbductiveTriple = parse_line(line_no, line)?;
        if !ids.insert(triple.id.clone()) {
            return Err(DatasetError::DuplicateId {
                line: line_no,
                id: triple.id,
            });
        }
        out.push(triple);
        Ok(())
    })?;
    Ok(out)
}

pub fn read_art(path: &Path) -> Result<Vec<ArtRecord>, DatasetError> {
    let mut out = Vec::new();
    for_each_line(path, |line_no, line| {
        let record: ArtRecord = parse_line(line_no, line)?;
        if !matches!(record.label, 1 | 2) {
            return Err(DatasetError::BadGoldChoice {
                line: line_no,
                value: record.label,
            });
        }
        out.push(record);
        Ok(())
    })?;
    Ok(out)
}

pub fn read_predictions(path: &Path) -> Result<Vec<Prediction>, DatasetError> {
    let mut out = Vec::new();
    for_each_line(path, |line_no, line| {
        let raw: RawPrediction = parse_line(line_no, line)?;
        let pred = u8::try_from(raw.pred)
            .ok()
            .and_then(Label::from_u8)
            .ok_or(DatasetError::UnknownLabel {
                line: line_no,
                value: raw.pred,
            })?;
        out.push(Prediction { id: raw.id, pred });
        Ok(())
    })?;
    Ok(out)
}

/// SHA-256 of a file's bytes, hex encoded.
pub fn file_digest(path: &Path) -> Result<String, DatasetError> {
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ArtOptions {
    /// Also emit `(hyp, obs1, obs2)` for every positive.
    pub interchange: bool,
    /// Also emit the rejected hypothesis as a negative (ablation only).
    pub include_rejected: bool,
}

fn art_id(provenance: &str, obs1: &str, hyp: &str, obs2: &str) -> String {
    let mut hasher = Sha256::new();
    for part in [provenance, obs1, hyp, obs2] {
        hasher.update(part);
        hasher.update("\n");
    }
    hasher.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
}

fn art_sample(provenance: Provenance, obs1: &str, hyp: &str, obs2: &str, label: Label) -> Sample {
    let provenance = provenance.to_string();
    Sample {
        id: art_id(&provenance, obs1, hyp, obs2),
        obs1: obs1.to_string(),
        obs2: obs2.to_string(),
        hyp: hyp.to_string(),
        label,
        provenance,
    }
}

/// Turns two-choice ART records into single-triple validity samples.
///
/// Only the gold hypothesis becomes a positive. The rejected one is merely
/// less plausible, not shown invalid, so it is dropped unless
/// `include_rejected` is set.
pub fn convert_art(records: &[ArtRecord], options: ArtOptions) -> Result<Vec<Sample>, DatasetError> {
    let mut out = Vec::new();
    for (i, record) in records.iter().enumerate() {
        let (gold, rejected) = match record.label {
            1 => (&record.hyp1, &record.hyp2),
            2 => (&record.hyp2, &record.hyp1),
            value => {
                return Err(DatasetError::BadGoldChoice {
                    line: i + 1,
                    value,
                })
            }
        };
        let positive = art_sample(
            Provenance::Art { record: i as u64 },
            &record.obs1,
            gold,
            &record.obs2,
            Label::Valid,
        );
        if options.interchange {
            let swapped = art_sample(
                Provenance::InterchangeOf(positive.id.clone()),
                gold,
                &record.obs1,
                &record.obs2,
                Label::Valid,
            );
            out.push(positive);
            out.push(swapped);
        } else {
            out.push(positive);
        }
        if options.include_rejected {
            out.push(art_sample(
                Provenance::Art { record: i as u64 },
                &record.obs1,
                rejected,
                &record.obs2,
                Label::Invalid,
            ));
        }
    }
    Ok(out)
}

/// Train/validation/test proportions plus shuffle seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    /// Proportions that reproduce 476,167 / 9,339 / 13,191 of 498,697.
    fn default() -> Self {
        SplitSpec {
            train: 0.954822,
            validation: 0.018727,
            test: 0.026451,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<(), DatasetError> {
        let ratios = [self.train, self.validation, self.test];
        if ratios.iter().any(|r| !r.is_finite() || *r <= 0.0) {
            return Err(DatasetError::BadRatios(format!("{ratios:?} must all be positive")));
        }
        let sum: f64 = ratios.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(DatasetError::BadRatios(format!("{ratios:?} sum to {sum}, not 1")));
        }
        Ok(())
    }

    /// `(train, validation, test)` sizes: evaluation splits get
    /// `floor(ratio * n)`, train takes the remainder.
    pub fn sizes(&self, n: usize) -> Result<(usize, usize, usize), DatasetError> {
        self.validate()?;
        let validation = (self.validation * n as f64).floor() as usize;
        let test = (self.test * n as f64).floor() as usize;
        let train = n - validation - test;
        for (name, size) in [("train", train), ("validation", validation), ("test", test)] {
            if size == 0 {
                return Err(DatasetError::EmptySplit(name));
            }
        }
        Ok((train, validation, test))
    }
}

impl std::str::FromStr for SplitSpec {
    type Err = DatasetError;

    /// Parses `a,b,c`; the seed is left at 0.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| DatasetError::BadRatios(format!("`{s}`: {e}")))?;
        let [train, validation, test] = parts[..] else {
            return Err(DatasetError::BadRatios(format!("`{s}`: expected three ratios")));
        };
        let spec = SplitSpec {
            train,
            validation,
            test,
            seed: 0,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Splits<T> {
    pub train: Vec<T>,
    pub validation: Vec<T>,
    pub test: Vec<T>,
    /// Removed to equalize label counts, in removal order.
    pub dropped: Vec<T>,
}

/// Shuffles deterministically by `spec.seed`, cuts into three splits, and
/// optionally equalizes labels within each split by dropping the trailing
/// excess-class items.
pub fn split<T: Labeled>(items: Vec<T>, spec: &SplitSpec, balance: bool) -> Result<Splits<T>, DatasetError> {
    let (n_train, n_validation, _) = spec.sizes(items.len())?;
    let mut items = items;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    items.shuffle(&mut rng);
    let mut rest = items.split_off(n_train);
    let train = items;
    let test = rest.split_off(n_validation);
    let validation = rest;
    let mut dropped = Vec::new();
    let mut finish = |part: Vec<T>| if balance { balance_labels(part, &mut dropped) } else { part };
    Ok(Splits {
        train: finish(train),
        validation: finish(validation),
        test: finish(test),
        dropped,
    })
}

fn balance_labels<T: Labeled>(items: Vec<T>, dropped: &mut Vec<T>) -> Vec<T> {
    let positives = items.iter().filter(|s| s.label() == Label::Valid).count();
    let negatives = items.len() - positives;
    let (excess_label, mut excess) = if positives > negatives {
        (Label::Valid, positives - negatives)
    } else {
        (Label::Invalid, negatives - positives)
    };
    let mut kept: Vec<T> = Vec::with_capacity(items.len());
    for item in items.into_iter().rev() {
        if excess > 0 && item.label() == excess_label {
            excess -= 1;
            dropped.push(item);
        } else {
            kept.push(item);
        }
    }
    kept.reverse();
    kept
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct SplitStats {
    pub name: String,
    pub total: usize,
    pub positives: usize,
    pub negatives: usize,
    pub max_obs1: usize,
    pub max_obs2: usize,
    pub max_hyp: usize,
}

impl SplitStats {
    pub fn from_samples(name: impl Into<String>, samples: &[Sample]) -> SplitStats {
        let mut stats = SplitStats {
            name: name.into(),
            ..SplitStats::default()
        };
        for s in samples {
            stats.total += 1;
            match s.label {
                Label::Valid => stats.positives += 1,
                Label::Invalid => stats.negatives += 1,
            }
            let len = s.char_lengths();
            stats.max_obs1 = stats.max_obs1.max(len.obs1);
            stats.max_obs2 = stats.max_obs2.max(len.obs2);
            stats.max_hyp = stats.max_hyp.max(len.hyp);
        }
        stats
    }

    pub fn is_balanced(&self) -> bool {
        self.positives == self.negatives
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct CorpusStats {
    pub splits: Vec<SplitStats>,
}

impl CorpusStats {
    pub fn total(&self) -> usize {
        self.splits.iter().map(|s| s.total).sum()
    }
}

impl fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:<14}", "")?;
        for s in &self.splits {
            write!(f, "{:>12}", s.name)?;
        }
        writeln!(f)?;
        let rows: [(&str, fn(&SplitStats) -> usize); 6] = [
            ("max obs1", |s| s.max_obs1),
            ("max obs2", |s| s.max_obs2),
            ("max hyp", |s| s.max_hyp),
            ("positives", |s| s.positives),
            ("negatives", |s| s.negatives),
            ("total", |s| s.total),
        ];
        for (name, get) in rows {
            write!(f, "{name:<14}")?;
            for s in &self.splits {
                write!(f, "{:>12}", get(s))?;
            }
            writeln!(f)?;
        }
        write!(f, "samples\t{}", self.total())
    }
}

/// Per-file statistics; each split is named by its file stem.
pub fn stats(paths: &[PathBuf]) -> Result<CorpusStats, DatasetError> {
    let mut out = CorpusStats::default();
    for path in paths {
        let samples = read_samples(path)?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        out.splits.push(SplitStats::from_samples(name, &samples));
    }
    Ok(out)
}
