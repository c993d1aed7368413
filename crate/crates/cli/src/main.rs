//! `abduct`: generate, validate, split and score abductive triple corpora.
//!
//! Exit status: 0 on success, 1 on usage or runtime errors, 2 when the
//! oracle disagrees with at least one label.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use abduct_core::dataset::{self, ArtOptions, CharLengths, Prediction, SplitSpec};
use abduct_core::forge::NegationStrategy;
use abduct_core::gen::GenConfig;
use abduct_core::oracle::{self, ValidationReport};
use abduct_core::pipeline::{self, PipelineConfig, SPLIT_FILES, TRIPLES_FILE};
use abduct_core::realize::{parse_word_list, TemplateSet, Vocabulary};
use abduct_core::score::{self, BaselineKind};

const EXIT_USAGE: u8 = 1;
const EXIT_DISAGREEMENT: u8 = 2;

#[derive(Parser)]
#[command(name = "abduct", version, about = "Build and check logic-grounded abductive triple corpora")]
struct Cli {
    /// Log progress to stderr; repeat for more detail.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate theories and symbolic triples.
    Gen(GenArgs),
    /// Render symbolic triples to English JSONL samples.
    Render(RenderArgs),
    /// Shuffle and cut a sample file into train/valid/test.
    Split(SplitArgs),
    /// Print per-file length and label statistics.
    Stats(StatsArgs),
    /// Check sample labels against the brute-force oracle.
    Validate(ValidateArgs),
    /// Convert two-choice ART records into validity samples.
    ConvertArt(ConvertArtArgs),
    /// Score predictions against gold samples.
    Score(ScoreArgs),
    /// Write trivial baseline predictions.
    Baseline(BaselineArgs),
    /// Generate, augment, negate, render, validate and split in one run.
    Pipeline(PipelineArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Toggle {
    On,
    Off,
}

impl Toggle {
    fn on(self) -> bool {
        self == Toggle::On
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum NegStrategy {
    Substitute,
    Textual,
}

impl From<NegStrategy> for NegationStrategy {
    fn from(s: NegStrategy) -> Self {
        match s {
            NegStrategy::Substitute => NegationStrategy::Substitute,
            NegStrategy::Textual => NegationStrategy::Textual,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Majority,
    Random,
}

#[derive(Args)]
struct VocabArgs {
    /// Predicate template file (`name/arity = {0} pattern | adjective`).
    #[arg(long)]
    templates: Option<PathBuf>,
    /// Entity name list, one lowercase word per line.
    #[arg(long)]
    names: Option<PathBuf>,
}

impl VocabArgs {
    fn load(&self) -> Result<(TemplateSet, Vocabulary)> {
        let templates = match &self.templates {
            Some(path) => TemplateSet::parse(&read_text(path)?)
                .with_context(|| format!("{}", path.display()))?,
            None => TemplateSet::builtin(),
        };
        let vocabulary = match &self.names {
            Some(path) => {
                let names = parse_word_list(&read_text(path)?)
                    .with_context(|| format!("{}", path.display()))?;
                Vocabulary::new(names, &templates)
            }
            None if self.templates.is_some() => Vocabulary::new(Vocabulary::builtin().names, &templates),
            None => Vocabulary::builtin(),
        };
        Ok((templates, vocabulary))
    }
}

#[derive(Args)]
struct CorpusArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of triples (samples) to produce.
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    /// Flat `key = value` generator settings.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "substitute")]
    neg_strategy: NegStrategy,
    #[arg(long, value_enum, default_value = "on")]
    interchange: Toggle,
    /// Pair each negative with its own interchange instead of negating the
    /// swapped positive.
    #[arg(long, value_enum, default_value = "off")]
    interchange_negatives: Toggle,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Drop triple groups whose rendered fields exceed `obs1,obs2,hyp` characters.
    #[arg(long, value_parser = parse_char_caps)]
    max_chars: Option<CharLengths>,
    #[command(flatten)]
    vocab: VocabArgs,
}

impl CorpusArgs {
    fn pipeline_config(&self) -> Result<PipelineConfig> {
        let mut gen = GenConfig::default();
        if let Some(path) = &self.config {
            gen.apply_kv(&read_text(path)?)
                .with_context(|| format!("{}", path.display()))?;
        }
        gen.seed = self.seed;
        gen.validate()?;
        if self.workers == 0 {
            bail!("--workers must be at least 1");
        }
        Ok(PipelineConfig {
            gen,
            n: self.n,
            negation: self.neg_strategy.into(),
            interchange: self.interchange.on(),
            interchange_negatives: self.interchange_negatives.on(),
            workers: self.workers,
            max_chars: self.max_chars,
            ..PipelineConfig::default()
        })
    }
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long)]
    out: PathBuf,
    /// Also write each theory's proof table.
    #[arg(long)]
    proofs: bool,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    triples: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    vocab: VocabArgs,
}

#[derive(Args)]
struct SplitArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_parser = parse_ratios)]
    ratios: Option<SplitSpec>,
    #[arg(long, value_enum, default_value = "on")]
    balance: Toggle,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(required = true)]
    files: Vec<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Symbolic triples, as written by `gen` or `pipeline`.
    #[arg(long)]
    triples: PathBuf,
    /// Rendered sample files whose labels are checked; without any, the
    /// triples' own labels are checked.
    #[arg(long)]
    samples: Vec<PathBuf>,
}

#[derive(Args)]
struct ConvertArtArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "on")]
    interchange: Toggle,
    /// Emit rejected hypotheses as negatives.
    #[arg(long)]
    include_rejected: bool,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    preds: PathBuf,
    /// Also write the JSON summary to this file.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct BaselineArgs {
    #[arg(long)]
    gold: PathBuf,
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PipelineArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long, value_parser = parse_ratios)]
    ratios: Option<SplitSpec>,
    #[arg(long, value_enum, default_value = "on")]
    balance: Toggle,
    #[arg(long)]
    out: PathBuf,
}

fn parse_ratios(s: &str) -> Result<SplitSpec, String> {
    s.parse::<SplitSpec>().map_err(|e| e.to_string())
}

fn parse_char_caps(s: &str) -> Result<CharLengths, String> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    match parts[..] {
        [obs1, obs2, hyp] => Ok(CharLengths { obs1, obs2, hyp }),
        _ => Err("expected three comma-separated lengths".into()),
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).with_context(|| format!("cannot create {}", path.display()))
}

fn split_spec(ratios: Option<SplitSpec>, seed: u64) -> SplitSpec {
    SplitSpec {
        seed,
        ..ratios.unwrap_or_default()
    }
}

/// Prints the report and maps disagreements to the failure status.
fn report_status(report: &ValidationReport) -> u8 {
    print!("{report}");
    if report.is_clean() {
        0
    } else {
        EXIT_DISAGREEMENT
    }
}

fn gen(args: &GenArgs) -> Result<u8> {
    let config = args.corpus.pipeline_config()?;
    let (templates, vocabulary) = args.corpus.vocab.load()?;
    let (yields, triples) = pipeline::generate_corpus(&config, &vocabulary, &templates)?;
    let theories = args.out.join("theories");
    create_dir(&theories)?;
    if args.proofs {
        create_dir(&args.out.join("proofs"))?;
    }
    for y in &yields {
        let path = theories.join(format!("theory_{:06}.lart", y.index));
        fs::write(&path, y.theory.render()).with_context(|| format!("cannot write {}", path.display()))?;
        if args.proofs {
            let path = args.out.join("proofs").join(format!("theory_{:06}.tsv", y.index));
            fs::write(&path, y.dag.dump()).with_context(|| format!("cannot write {}", path.display()))?;
        }
    }
    dataset::write_jsonl(&args.out.join(TRIPLES_FILE), &triples)?;
    println!("theories\t{}", yields.len());
    println!("triples\t{}", triples.len());
    Ok(0)
}

fn render(args: &RenderArgs) -> Result<u8> {
    let (templates, _) = args.vocab.load()?;
    let triples = dataset::read_triples(&args.triples)?;
    let samples = pipeline::render_all(&templates, &triples)?;
    let n = dataset::write_samples(&samples, &args.out)?;
    println!("samples\t{n}");
    Ok(0)
}

fn split(args: &SplitArgs) -> Result<u8> {
    let spec = split_spec(args.ratios, args.seed);
    let samples = dataset::read_samples(&args.input)?;
    let splits = dataset::split(samples, &spec, args.balance.on())?;
    create_dir(&args.out)?;
    for (file, part) in SPLIT_FILES.iter().zip([&splits.train, &splits.validation, &splits.test]) {
        dataset::write_samples(part, &args.out.join(file))?;
        println!("{}\t{}", file.trim_end_matches(".jsonl"), part.len());
    }
    println!("dropped\t{}", splits.dropped.len());
    Ok(0)
}

fn stats(args: &StatsArgs) -> Result<u8> {
    println!("{}", dataset::stats(&args.files)?);
    Ok(0)
}

fn validate(args: &ValidateArgs) -> Result<u8> {
    let triples = dataset::read_triples(&args.triples)?;
    let report = if args.samples.is_empty() {
        oracle::validate_triples(&triples)?
    } else {
        let mut samples = Vec::new();
        for path in &args.samples {
            samples.extend(dataset::read_samples(path)?);
        }
        oracle::validate_samples(&samples, &triples)?
    };
    Ok(report_status(&report))
}

fn convert_art(args: &ConvertArtArgs) -> Result<u8> {
    let records = dataset::read_art(&args.input)?;
    let options = ArtOptions {
        interchange: args.interchange.on(),
        include_rejected: args.include_rejected,
    };
    let samples = dataset::convert_art(&records, options)?;
    let n = dataset::write_samples(&samples, &args.out)?;
    println!("records\t{}", records.len());
    println!("samples\t{n}");
    Ok(0)
}

fn score(args: &ScoreArgs) -> Result<u8> {
    let gold = dataset::read_samples(&args.gold)?;
    let preds = dataset::read_predictions(&args.preds)?;
    let report = score::score(&gold, &preds)?;
    print!("{report}");
    let json = report.to_json_line();
    println!("{json}");
    if let Some(path) = &args.json {
        fs::write(path, format!("{json}\n")).with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(0)
}

fn baseline(args: &BaselineArgs) -> Result<u8> {
    let gold = dataset::read_samples(&args.gold)?;
    let kind = match args.kind {
        Kind::Majority => BaselineKind::Majority,
        Kind::Random => BaselineKind::Random,
    };
    let preds: Vec<Prediction> = score::baseline(kind, &gold, args.seed);
    let n = dataset::write_jsonl(&args.out, &preds)?;
    println!("predictions\t{n}");
    Ok(0)
}

fn run_pipeline(args: &PipelineArgs) -> Result<u8> {
    let mut config = args.corpus.pipeline_config()?;
    config.split = split_spec(args.ratios, args.corpus.seed);
    config.balance = args.balance.on();
    let (templates, vocabulary) = args.corpus.vocab.load()?;
    let summary = pipeline::run_with(&config, &vocabulary, &templates, &args.out)?;
    info!("{} theories, {} dropped by balancing", summary.theories, summary.dropped);
    println!("{}", summary.stats);
    Ok(report_status(&summary.report))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();
    let result = match &cli.command {
        Command::Gen(a) => gen(a),
        Command::Render(a) => render(a),
        Command::Split(a) => split(a),
        Command::Stats(a) => stats(a),
        Command::Validate(a) => validate(a),
        Command::ConvertArt(a) => convert_art(a),
        Command::Score(a) => score(a),
        Command::Baseline(a) => baseline(a),
        Command::Pipeline(a) => run_pipeline(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
