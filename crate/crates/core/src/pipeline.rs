//! End-to-end corpus construction: generate, extract, augment, negate,
//! render, validate and split.
//!
//! Theories are produced in index order in fixed-size batches; a batch may be
//! computed in parallel but is merged by index, so output does not depend on
//! the worker count.

use std::fs;
use std::path::{Path, PathBuf};

use log::{debug, info, warn};
use rayon::prelude::*;
use thiserror::Error;

use crate::chain::ProofDag;
use crate::dataset::{self, CharLengths, CorpusStats, DatasetError, Sample, SplitSpec, SplitStats};
use crate::forge::{
    self, extract_triples, interchange, interchange_with, negate, AbductiveTriple, ExtractConfig,
    ForgeError, NegationStrategy, TheoryRef,
};
use crate::gen::{generate_theory_at, stream_seed, GenConfig, GenError};
use crate::logic::Theory;
use crate::oracle::{self, OracleError, ValidationReport};
use crate::realize::{RenderError, TemplateSet, Vocabulary};

/// File names written into a pipeline output directory.
pub const TRIPLES_FILE: &str = "triples.jsonl";
pub const SPLIT_FILES: [&str; 3] = ["train.jsonl", "valid.jsonl", "test.jsonl"];
pub const REPORT_TEXT_FILE: &str = "validation_report.txt";
pub const REPORT_JSON_FILE: &str = "validation_report.jsonl";
pub const STATS_FILE: &str = "stats.txt";

/// Consecutive theory indices without any usable triple before giving up.
const MAX_BARREN_THEORIES: u64 = 10_000;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Forge(#[from] ForgeError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("no usable triples in {0} consecutive theories; check the generator config")]
    Barren(u64),
    #[error("cannot build thread pool: {0}")]
    Workers(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub gen: GenConfig,
    pub extract: ExtractConfig,
    pub split: SplitSpec,
    /// Number of samples in the corpus before splitting.
    pub n: usize,
    pub negation: NegationStrategy,
    /// Double positives by swapping O₁ and H.
    pub interchange: bool,
    /// Swap negatives too (pair each negative with its interchange).
    pub interchange_negatives: bool,
    pub balance: bool,
    pub workers: usize,
    /// Reject whole triple groups whose rendered fields exceed these lengths.
    pub max_chars: Option<CharLengths>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            gen: GenConfig::default(),
            extract: ExtractConfig::default(),
            split: SplitSpec::default(),
            n: 10_000,
            negation: NegationStrategy::Substitute,
            interchange: true,
            interchange_negatives: false,
            balance: true,
            workers: 1,
            max_chars: None,
        }
    }
}

/// Everything one generated theory contributes.
#[derive(Debug, Clone)]
pub struct TheoryYield {
    pub index: u64,
    pub theory: Theory,
    pub dag: ProofDag,
    /// Extracted positives before augmentation.
    pub extracted: usize,
    /// Positives and negatives, interleaved so every even-length prefix is
    /// label-balanced.
    pub triples: Vec<AbductiveTriple>,
}

fn negation_seed(base: u64, triple: &AbductiveTriple) -> u64 {
    let id_bits = u64::from_str_radix(&triple.id, 16).unwrap_or(0);
    stream_seed(base ^ 0x6E65_6761_7465, id_bits)
}

/// The positive/negative group built around one extracted triple.
fn triple_group(
    config: &PipelineConfig,
    theory: &Theory,
    positive: AbductiveTriple,
) -> Result<Vec<AbductiveTriple>, ForgeError> {
    let neg = |t: &AbductiveTriple| negate(t, config.negation, negation_seed(config.gen.seed, t), theory);
    let first_negative = neg(&positive)?;
    if !config.interchange {
        return Ok(vec![positive, first_negative]);
    }
    let swapped = interchange(&positive)?;
    let second_negative = if config.interchange_negatives {
        interchange_with(&first_negative, true)?
    } else {
        neg(&swapped)?
    };
    Ok(vec![positive, first_negative, swapped, second_negative])
}

fn fits(templates: &TemplateSet, group: &[AbductiveTriple], cap: CharLengths) -> Result<bool, RenderError> {
    for t in group {
        let len = templates.render_triple(t)?.char_lengths();
        if len.obs1 > cap.obs1 || len.obs2 > cap.obs2 || len.hyp > cap.hyp {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Generates theory `index` and forges its triple groups. Theories the
/// generator cannot produce yield `None`.
pub fn forge_theory(
    config: &PipelineConfig,
    vocabulary: &Vocabulary,
    templates: &TemplateSet,
    index: u64,
) -> Result<Option<TheoryYield>, PipelineError> {
    let (theory, dag) = match generate_theory_at(&config.gen, vocabulary, index) {
        Ok(x) => x,
        Err(GenError::Exhausted { .. }) => {
            debug!("theory {index}: generator exhausted");
            return Ok(None);
        }
        Err(e) => return Err(e.into()),
    };
    let source = TheoryRef {
        seed: config.gen.seed,
        index,
    };
    let positives = extract_triples(&theory, &dag, &config.extract, source)?;
    let extracted = positives.len();
    let mut triples = Vec::new();
    for positive in positives {
        let group = match triple_group(config, &theory, positive) {
            Ok(g) => g,
            Err(ForgeError::SubstituteExhausted(id)) => {
                debug!("theory {index}: no false conclusion for {id}");
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        if let Some(cap) = config.max_chars {
            if !fits(templates, &group, cap)? {
                continue;
            }
        }
        triples.extend(group);
    }
    Ok(Some(TheoryYield {
        index,
        theory,
        dag,
        extracted,
        triples,
    }))
}

/// Theories in index order until at least `config.n` triples are collected;
/// the triple list is then cut to exactly `n`.
pub fn generate_corpus(
    config: &PipelineConfig,
    vocabulary: &Vocabulary,
    templates: &TemplateSet,
) -> Result<(Vec<TheoryYield>, Vec<AbductiveTriple>), PipelineError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers.max(1))
        .build()
        .map_err(|e| PipelineError::Workers(e.to_string()))?;
    let batch = (config.workers.max(1) * 8) as u64;
    let mut yields = Vec::new();
    let mut triples: Vec<AbductiveTriple> = Vec::with_capacity(config.n);
    let mut next = 0u64;
    let mut barren = 0u64;
    while triples.len() < config.n {
        let indices: Vec<u64> = (next..next + batch).collect();
        next += batch;
        let results: Vec<Result<Option<TheoryYield>, PipelineError>> = pool.install(|| {
            indices
                .par_iter()
                .map(|&i| forge_theory(config, vocabulary, templates, i))
                .collect()
        });
        for result in results {
            if triples.len() >= config.n {
                break;
            }
            match result? {
                Some(y) if !y.triples.is_empty() => {
                    barren = 0;
                    triples.extend(y.triples.iter().cloned());
                    yields.push(y);
                }
                _ => {
                    barren += 1;
                    if barren >= MAX_BARREN_THEORIES {
                        return Err(PipelineError::Barren(barren));
                    }
                }
            }
        }
    }
    triples.truncate(config.n);
    info!("{} triples from {} theories", triples.len(), yields.len());
    Ok((yields, triples))
}

pub fn render_all(templates: &TemplateSet, triples: &[AbductiveTriple]) -> Result<Vec<Sample>, RenderError> {
    triples.iter().map(|t| templates.render_triple(t)).collect()
}

#[derive(Debug, Clone)]
pub struct PipelineSummary {
    pub report: ValidationReport,
    pub stats: CorpusStats,
    pub dropped: usize,
    pub theories: usize,
}

fn write_text(path: &Path, text: &str) -> Result<(), PipelineError> {
    fs::write(path, text).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_report(dir: &Path, report: &ValidationReport) -> Result<(), PipelineError> {
    write_text(&dir.join(REPORT_TEXT_FILE), &report.to_string())?;
    write_text(&dir.join(REPORT_JSON_FILE), &format!("{}\n", report.to_json_line()))
}

/// Runs the whole construction and writes the output directory.
pub fn run(config: &PipelineConfig, out: &Path) -> Result<PipelineSummary, PipelineError> {
    run_with(config, &Vocabulary::builtin(), &TemplateSet::builtin(), out)
}

pub fn run_with(
    config: &PipelineConfig,
    vocabulary: &Vocabulary,
    templates: &TemplateSet,
    out: &Path,
) -> Result<PipelineSummary, PipelineError> {
    fs::create_dir_all(out).map_err(|source| PipelineError::Io {
        path: out.to_path_buf(),
        source,
    })?;
    let (yields, triples) = generate_corpus(config, vocabulary, templates)?;
    let samples = render_all(templates, &triples)?;
    let report = oracle::validate_samples(&samples, &triples)?;
    if !report.is_clean() {
        warn!("{} oracle disagreements", report.disagreements.len());
    }
    dataset::write_jsonl(&out.join(TRIPLES_FILE), &triples)?;
    write_report(out, &report)?;

    let splits = dataset::split(samples, &config.split, config.balance)?;
    if !splits.dropped.is_empty() {
        info!("balancing dropped {} samples", splits.dropped.len());
    }
    let mut stats = CorpusStats::default();
    for (file, part) in SPLIT_FILES.iter().zip([&splits.train, &splits.validation, &splits.test]) {
        dataset::write_samples(part, &out.join(file))?;
        let name = file.trim_end_matches(".jsonl");
        stats.splits.push(SplitStats::from_samples(name, part));
    }
    write_text(&out.join(STATS_FILE), &format!("{stats}\n"))?;
    Ok(PipelineSummary {
        report,
        stats,
        dropped: splits.dropped.len(),
        theories: yields.len(),
    })
}

/// Number of valid triples after augmentation for a batch of extracted
/// positives; exposed for callers that augment without the pipeline.
pub fn augment_positives(positives: &[AbductiveTriple]) -> Result<Vec<AbductiveTriple>, ForgeError> {
    let mut out = Vec::with_capacity(positives.len() * 2);
    for p in positives {
        out.push(p.clone());
        out.push(forge::interchange(p)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forge::Label;

    fn small(n: usize) -> PipelineConfig {
        PipelineConfig {
            n,
            split: SplitSpec {
                train: 0.8,
                validation: 0.1,
                test: 0.1,
                seed: 1,
            },
            ..PipelineConfig::default()
        }
    }

    #[test]
    fn groups_are_balanced_prefixes() {
        let config = small(200);
        let (_, triples) =
            generate_corpus(&config, &Vocabulary::builtin(), &TemplateSet::builtin()).unwrap();
        assert_eq!(triples.len(), 200);
        for pair in triples.chunks(2) {
            assert_eq!(pair[0].label, Label::Valid);
            assert_eq!(pair[1].label, Label::Invalid);
        }
    }

    #[test]
    fn worker_count_does_not_change_output() {
        let vocab = Vocabulary::builtin();
        let templates = TemplateSet::builtin();
        let one = generate_corpus(&small(300), &vocab, &templates).unwrap().1;
        let mut four = small(300);
        four.workers = 4;
        assert_eq!(generate_corpus(&four, &vocab, &templates).unwrap().1, one);
    }

    #[test]
    fn char_cap_rejects_groups() {
        let mut config = small(100);
        config.max_chars = Some(CharLengths {
            obs1: 200,
            obs2: 60,
            hyp: 200,
        });
        let templates = TemplateSet::builtin();
        let (_, triples) = generate_corpus(&config, &Vocabulary::builtin(), &templates).unwrap();
        for s in render_all(&templates, &triples).unwrap() {
            let len = s.char_lengths();
            assert!(len.obs1 <= 200 && len.obs2 <= 60 && len.hyp <= 200);
        }
    }

    #[test]
    fn interchange_off_halves_groups() {
        let mut config = small(50);
        config.interchange = false;
        let (yields, _) =
            generate_corpus(&config, &Vocabulary::builtin(), &TemplateSet::builtin()).unwrap();
        for y in &yields {
            assert!(y.triples.len() <= 2 * y.extracted);
        }
    }

    #[test]
    fn run_writes_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let summary = run(&small(400), dir.path()).unwrap();
        assert!(summary.report.is_clean());
        assert_eq!(summary.report.checked, 400);
        for f in SPLIT_FILES.iter().chain(&[TRIPLES_FILE, REPORT_TEXT_FILE, REPORT_JSON_FILE, STATS_FILE]) {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        for s in &summary.stats.splits {
            assert!(s.is_balanced());
        }
        assert_eq!(summary.stats.total() + summary.dropped, 400);
    }
}
