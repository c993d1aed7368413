//! Random theory generation by rejection sampling.
//!
//! Each theory draws from its own ChaCha stream keyed by `(seed, index)`, so
//! theories can be generated in any order or in parallel and still come out
//! identical.

use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::chain::{saturate_with_cap, ChainError, ProofDag, DEFAULT_MAX_FIXPOINT};
use crate::logic::{Arity, Atom, LogicError, Rule, Term, Theory};
use crate::realize::Vocabulary;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("invalid generator config: {0}")]
    Config(String),
    #[error("config line {line}: {message}")]
    ConfigSyntax { line: usize, message: String },
    #[error("no theory reached depth {min}..={max} in {attempts} attempts")]
    Exhausted { min: usize, max: usize, attempts: usize },
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error(transparent)]
    Chain(#[from] ChainError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub seed: u64,
    pub n_constants: usize,
    pub n_predicates_unary: usize,
    pub n_predicates_binary: usize,
    pub n_facts: usize,
    pub n_rules: usize,
    pub max_body_atoms: usize,
    pub target_depth_min: usize,
    pub target_depth_max: usize,
    pub max_attempts: usize,
    /// Chance that a rule head uses a predicate absent from its body.
    pub head_fresh_prob: f64,
    pub max_fixpoint: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            seed: 0,
            n_constants: 4,
            n_predicates_unary: 6,
            n_predicates_binary: 2,
            n_facts: 5,
            n_rules: 8,
            max_body_atoms: 2,
            target_depth_min: 2,
            target_depth_max: 4,
            max_attempts: 200,
            head_fresh_prob: 0.8,
            max_fixpoint: DEFAULT_MAX_FIXPOINT,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), GenError> {
        let bad = |m: &str| Err(GenError::Config(m.to_string()));
        if self.target_depth_min < 2 {
            return bad("target_depth_min must be at least 2");
        }
        if self.target_depth_max < self.target_depth_min {
            return bad("target_depth_max must be at least target_depth_min");
        }
        if self.n_constants == 0 || self.n_facts == 0 || self.max_attempts == 0 {
            return bad("n_constants, n_facts and max_attempts must be positive");
        }
        if self.n_predicates_unary + self.n_predicates_binary == 0 {
            return bad("at least one predicate is required");
        }
        if self.max_body_atoms == 0 {
            return bad("max_body_atoms must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.head_fresh_prob) {
            return bad("head_fresh_prob must lie in [0, 1]");
        }
        Ok(())
    }

    /// Overrides fields from flat `key = value` text. Unknown keys are errors.
    pub fn apply_kv(&mut self, text: &str) -> Result<(), GenError> {
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let syntax = |message: String| GenError::ConfigSyntax { line, message };
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| syntax("expected `key = value`".into()))?;
            let (key, value) = (key.trim(), value.trim());
            fn num<T: FromStr>(value: &str) -> Result<T, String> {
                value.parse().map_err(|_| format!("cannot parse `{value}`"))
            }
            let result = match key {
                "seed" => num(value).map(|v| self.seed = v),
                "n_constants" => num(value).map(|v| self.n_constants = v),
                "n_predicates_unary" => num(value).map(|v| self.n_predicates_unary = v),
                "n_predicates_binary" => num(value).map(|v| self.n_predicates_binary = v),
                "n_facts" => num(value).map(|v| self.n_facts = v),
                "n_rules" => num(value).map(|v| self.n_rules = v),
                "max_body_atoms" => num(value).map(|v| self.max_body_atoms = v),
                "target_depth_min" => num(value).map(|v| self.target_depth_min = v),
                "target_depth_max" => num(value).map(|v| self.target_depth_max = v),
                "max_attempts" => num(value).map(|v| self.max_attempts = v),
                "head_fresh_prob" => num(value).map(|v| self.head_fresh_prob = v),
                "max_fixpoint" => num(value).map(|v| self.max_fixpoint = v),
                other => Err(format!("unknown key `{other}`")),
            };
            result.map_err(|m| syntax(format!("{key}: {m}")))?;
        }
        Ok(())
    }

    pub fn from_kv(text: &str) -> Result<GenConfig, GenError> {
        let mut config = GenConfig::default();
        config.apply_kv(text)?;
        Ok(config)
    }
}

/// Mixes seed and theory index into one RNG seed (splitmix64 finalizer).
pub fn stream_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index)
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn generate_theory(config: &GenConfig) -> Result<(Theory, ProofDag), GenError> {
    generate_theory_at(config, &Vocabulary::builtin(), 0)
}

/// Generates theory number `index` of the stream for `config.seed`.
pub fn generate_theory_at(
    config: &GenConfig,
    vocabulary: &Vocabulary,
    index: u64,
) -> Result<(Theory, ProofDag), GenError> {
    config.validate()?;
    if vocabulary.names.len() < config.n_constants
        || vocabulary.unary.len() < config.n_predicates_unary
        || vocabulary.binary.len() < config.n_predicates_binary
    {
        return Err(GenError::Config(format!(
            "vocabulary too small: {} names, {} unary, {} binary predicates",
            vocabulary.names.len(),
            vocabulary.unary.len(),
            vocabulary.binary.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(config.seed, index));
    for _ in 0..config.max_attempts {
        let theory = draw_theory(config, vocabulary, &mut rng)?;
        let dag = match saturate_with_cap(&theory, config.max_fixpoint) {
            Ok(dag) => dag,
            Err(ChainError::ResourceCap { .. }) => continue,
        };
        let hit = dag
            .steps
            .values()
            .any(|s| (config.target_depth_min..=config.target_depth_max).contains(&s.depth));
        if hit {
            return Ok((theory, dag));
        }
    }
    Err(GenError::Exhausted {
        min: config.target_depth_min,
        max: config.target_depth_max,
        attempts: config.max_attempts,
    })
}

fn draw_theory(
    config: &GenConfig,
    vocabulary: &Vocabulary,
    rng: &mut ChaCha8Rng,
) -> Result<Theory, GenError> {
    let mut constants: Vec<&String> = vocabulary
        .names
        .choose_multiple(rng, config.n_constants)
        .collect();
    constants.sort();
    let mut predicates: BTreeMap<String, Arity> = BTreeMap::new();
    for p in vocabulary.unary.choose_multiple(rng, config.n_predicates_unary) {
        predicates.insert(p.clone(), Arity::Unary);
    }
    for p in vocabulary.binary.choose_multiple(rng, config.n_predicates_binary) {
        predicates.insert(p.clone(), Arity::Binary);
    }
    let preds: Vec<(&String, Arity)> = predicates.iter().map(|(p, a)| (p, *a)).collect();

    let universe: usize = preds
        .iter()
        .map(|(_, a)| config.n_constants.pow(a.count() as u32))
        .sum();
    let n_facts = config.n_facts.min(universe);
    let mut facts = BTreeSet::new();
    while facts.len() < n_facts {
        let (pred, arity) = preds[rng.gen_range(0..preds.len())];
        let args = (0..arity.count())
            .map(|_| Term::Const(constants[rng.gen_range(0..constants.len())].clone()))
            .collect();
        facts.insert(Atom::new(pred.clone(), args));
    }

    let mut rules = Vec::with_capacity(config.n_rules);
    while rules.len() < config.n_rules {
        if let Some(rule) = draw_rule(config, &preds, rng, rules.len())? {
            rules.push(rule);
        }
    }
    Ok(Theory::from_parts(predicates, rules, facts)?)
}

/// One rule over variables `X`, `Y`; `None` when the draw is degenerate.
fn draw_rule(
    config: &GenConfig,
    preds: &[(&String, Arity)],
    rng: &mut ChaCha8Rng,
    index: usize,
) -> Result<Option<Rule>, GenError> {
    const VARS: [&str; 2] = ["X", "Y"];
    let var = |v: &str| Term::Var(v.to_string());
    let body_len = rng.gen_range(1..=config.max_body_atoms);
    let mut body: Vec<Atom> = Vec::with_capacity(body_len);
    let mut used: Vec<&str> = Vec::new();
    for _ in 0..body_len {
        let (pred, arity) = preds[rng.gen_range(0..preds.len())];
        let args: Vec<&str> = match arity {
            Arity::Unary => vec![if used.is_empty() { "X" } else { used[rng.gen_range(0..used.len())] }],
            Arity::Binary => {
                let mut pair = [VARS[0], VARS[1]];
                pair.shuffle(rng);
                pair.to_vec()
            }
        };
        for a in &args {
            if !used.contains(a) {
                used.push(a);
            }
        }
        let atom = Atom::new(pred.clone(), args.into_iter().map(var).collect());
        if body.contains(&atom) {
            return Ok(None);
        }
        body.push(atom);
    }
    used.sort_unstable();

    let body_preds: BTreeSet<&str> = body.iter().map(|a| a.predicate.as_str()).collect();
    let fresh: Vec<&(&String, Arity)> = preds
        .iter()
        .filter(|(p, _)| !body_preds.contains(p.as_str()))
        .collect();
    let (head_pred, head_arity) = if !fresh.is_empty() && rng.gen_bool(config.head_fresh_prob) {
        *fresh[rng.gen_range(0..fresh.len())]
    } else {
        preds[rng.gen_range(0..preds.len())]
    };
    let head_args: Vec<Term> = match head_arity {
        Arity::Unary => vec![var(used[rng.gen_range(0..used.len())])],
        Arity::Binary => {
            let mut pair = if used.len() == 2 { [used[0], used[1]] } else { [used[0], used[0]] };
            pair.shuffle(rng);
            pair.iter().map(|v| var(v)).collect()
        }
    };
    let head = Atom::new(head_pred.clone(), head_args);
    if body.contains(&head) {
        return Ok(None);
    }
    Ok(Some(Rule::new(format!("r{index}"), body, head)?))
}
