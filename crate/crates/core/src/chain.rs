//! Semi-naive forward chaining with proof recording.
//!
//! Rounds are evaluated breadth-first: an atom first derived in round `k`
//! has depth `k`, which is also its minimal derivation height. Within a
//! round, rules fire in theory order and substitutions in lexicographic
//! order; the first derivation of an atom is the one recorded.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::logic::{join_body, Atom, AtomIndex, Substitution, Theory};

pub const DEFAULT_MAX_FIXPOINT: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChainError {
    #[error("fixpoint exceeded {cap} atoms")]
    ResourceCap { cap: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProofStep {
    pub derived: Atom,
    pub rule_id: String,
    pub premises: Vec<Atom>,
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ProofDag {
    pub facts: BTreeSet<Atom>,
    /// First recorded derivation of every non-fact atom in the fixpoint.
    pub steps: BTreeMap<Atom, ProofStep>,
    pub fixpoint: BTreeSet<Atom>,
    /// Derived atoms in the order they were recorded.
    pub order: Vec<Atom>,
}

impl ProofDag {
    pub fn depth(&self, atom: &Atom) -> Option<usize> {
        chain_depth(self, atom)
    }

    pub fn max_depth(&self) -> usize {
        self.steps.values().map(|s| s.depth).max().unwrap_or(0)
    }

    /// The facts and rule ids the recorded proof of `atom` rests on.
    pub fn support(&self, atom: &Atom) -> Option<(BTreeSet<Atom>, BTreeSet<String>)> {
        if !self.fixpoint.contains(atom) {
            return None;
        }
        let mut facts = BTreeSet::new();
        let mut rules = BTreeSet::new();
        let mut seen = BTreeSet::new();
        let mut stack = vec![atom];
        while let Some(a) = stack.pop() {
            if !seen.insert(a) {
                continue;
            }
            match self.steps.get(a) {
                Some(step) => {
                    rules.insert(step.rule_id.clone());
                    stack.extend(step.premises.iter());
                }
                None => {
                    facts.insert(a.clone());
                }
            }
        }
        Some((facts, rules))
    }

    /// One derivation step per line: `depth<TAB>atom<TAB>rule_id<TAB>premises`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for fact in &self.facts {
            let _ = writeln!(out, "0\t{fact}\tfact\t");
        }
        for atom in &self.order {
            let step = &self.steps[atom];
            let premises: Vec<String> = step.premises.iter().map(ToString::to_string).collect();
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}",
                step.depth,
                step.derived,
                step.rule_id,
                premises.join(" & ")
            );
        }
        out
    }
}

pub fn saturate(theory: &Theory) -> Result<ProofDag, ChainError> {
    saturate_with_cap(theory, DEFAULT_MAX_FIXPOINT)
}

pub fn saturate_with_cap(theory: &Theory, cap: usize) -> Result<ProofDag, ChainError> {
    let mut dag = ProofDag {
        facts: theory.facts.clone(),
        fixpoint: theory.facts.clone(),
        ..ProofDag::default()
    };
    if dag.fixpoint.len() > cap {
        return Err(ChainError::ResourceCap { cap });
    }
    let mut depth_of: BTreeMap<Atom, usize> = theory.facts.iter().map(|a| (a.clone(), 0)).collect();

    // `old` holds atoms from rounds before the previous one, `delta` the
    // previous round's output, `all` their union.
    let mut old = AtomIndex::new();
    let mut delta = AtomIndex::from_atoms(&theory.facts);
    let mut all = delta.clone();
    let mut round = 0;

    while !delta.is_empty() {
        round += 1;
        let mut fresh: Vec<Atom> = Vec::new();
        for rule in &theory.rules {
            let mut matches: Vec<Substitution> = Vec::new();
            for pivot in 0..rule.body.len() {
                let source = |i: usize| -> &AtomIndex {
                    match i.cmp(&pivot) {
                        std::cmp::Ordering::Less => &old,
                        std::cmp::Ordering::Equal => &delta,
                        std::cmp::Ordering::Greater => &all,
                    }
                };
                join_body(&rule.body, &source, &mut matches);
            }
            matches.sort();
            matches.dedup();
            for subst in matches {
                let head = subst
                    .apply(&rule.head)
                    .expect("range-restricted head is ground under a full body match");
                if dag.fixpoint.contains(&head) {
                    continue;
                }
                let premises: Vec<Atom> = rule
                    .body
                    .iter()
                    .map(|b| subst.apply(b).expect("body atom is ground"))
                    .collect();
                let depth = premises.iter().map(|p| depth_of[p]).max().unwrap_or(0) + 1;
                debug_assert_eq!(depth, round);
                depth_of.insert(head.clone(), depth);
                dag.fixpoint.insert(head.clone());
                dag.order.push(head.clone());
                dag.steps.insert(
                    head.clone(),
                    ProofStep {
                        derived: head.clone(),
                        rule_id: rule.id.clone(),
                        premises,
                        depth,
                    },
                );
                fresh.push(head);
                if dag.fixpoint.len() > cap {
                    return Err(ChainError::ResourceCap { cap });
                }
            }
        }
        old = all.clone();
        delta = AtomIndex::from_atoms(&fresh);
        all.extend(&delta);
    }
    Ok(dag)
}

pub fn entails(theory: &Theory, atom: &Atom) -> Result<bool, ChainError> {
    Ok(saturate(theory)?.fixpoint.contains(atom))
}

/// 0 for facts, the recorded derivation depth for derived atoms, `None`
/// outside the fixpoint.
pub fn chain_depth(dag: &ProofDag, atom: &Atom) -> Option<usize> {
    if dag.facts.contains(atom) {
        Some(0)
    } else {
        dag.steps.get(atom).map(|s| s.depth)
    }
}
