//! Toolkit for building logic-grounded abductive reasoning corpora.
//!
//! Random definite-clause theories are saturated by forward chaining; proofs
//! of depth two or more become `(O₁, H, O₂)` triples that are augmented by
//! swapping O₁ and H, negated by making O₂ false, rendered to English, and
//! checked by an independent brute-force oracle before being split into
//! train/validation/test JSONL files.

pub mod chain;
pub mod dataset;
pub mod forge;
pub mod gen;
pub mod logic;
pub mod oracle;
pub mod pipeline;
pub mod realize;
pub mod score;

pub use chain::{chain_depth, entails, saturate, ProofDag, ProofStep};
pub use dataset::{Sample, SplitSpec};
pub use forge::{AbductiveTriple, Label, NegationStrategy, Provenance};
pub use gen::GenConfig;
pub use logic::{parse_theory, Atom, Rule, Statement, Term, Theory};
pub use pipeline::PipelineConfig;
pub use realize::TemplateSet;
