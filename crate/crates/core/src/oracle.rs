//! Brute-force validity checking, kept independent of the chaining engine.
//!
//! The naive fixpoint enumerates every ground substitution of every rule over
//! the constants occurring in the statement set and iterates to closure. It
//! shares no matching code with [`crate::chain`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::chain::DEFAULT_MAX_FIXPOINT;
use crate::dataset::Sample;
use crate::forge::{AbductiveTriple, Label, Provenance};
use crate::logic::{Atom, Rule, Statement, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("naive fixpoint exceeded {cap} atoms")]
    ResourceCap { cap: usize },
    #[error("triple `{0}` has no symbolic payload")]
    NotCheckable(String),
}

fn rule_variables(rule: &Rule) -> Vec<String> {
    let mut vars: Vec<String> = Vec::new();
    for atom in rule.body.iter().chain([&rule.head]) {
        for t in &atom.args {
            if let Term::Var(v) = t {
                if !vars.contains(v) {
                    vars.push(v.clone());
                }
            }
        }
    }
    vars
}

fn instantiate(atom: &Atom, vars: &[String], values: &[&str]) -> Atom {
    let args = atom
        .args
        .iter()
        .map(|t| match t {
            Term::Const(c) => Term::Const(c.clone()),
            Term::Var(v) => {
                let i = vars.iter().position(|x| x == v).expect("variable collected");
                Term::Const(values[i].to_string())
            }
        })
        .collect();
    Atom::new(atom.predicate.clone(), args)
}

/// Calls `f` on every tuple in `constants^n`.
fn for_each_tuple<'a>(constants: &[&'a str], n: usize, f: &mut dyn FnMut(&[&'a str])) {
    let mut tuple = vec![""; n];
    fn go<'a>(
        constants: &[&'a str],
        tuple: &mut Vec<&'a str>,
        i: usize,
        f: &mut dyn FnMut(&[&'a str]),
    ) {
        if i == tuple.len() {
            f(tuple);
            return;
        }
        for c in constants {
            tuple[i] = c;
            go(constants, tuple, i + 1, f);
        }
    }
    go(constants, &mut tuple, 0, f);
}

/// Rounds of "fire every rule under every ground substitution against the
/// previous round's set". Returns each atom with the round it first appeared.
fn naive_rounds(statements: &[&Statement], cap: usize) -> Result<BTreeMap<Atom, usize>, OracleError> {
    let mut known: BTreeMap<Atom, usize> = BTreeMap::new();
    let mut constants: BTreeSet<&str> = BTreeSet::new();
    let mut rules: Vec<&Rule> = Vec::new();
    for stmt in statements {
        match stmt {
            Statement::Fact(a) => {
                constants.extend(a.constants());
                known.insert(a.clone(), 0);
            }
            Statement::Rule(r) => {
                for atom in r.body.iter().chain([&r.head]) {
                    constants.extend(atom.constants());
                }
                rules.push(r);
            }
        }
    }
    let constants: Vec<&str> = constants.into_iter().collect();
    if known.len() > cap {
        return Err(OracleError::ResourceCap { cap });
    }
    let mut round = 0;
    loop {
        round += 1;
        let previous: BTreeSet<Atom> = known.keys().cloned().collect();
        let mut added = Vec::new();
        for rule in &rules {
            let vars = rule_variables(rule);
            for_each_tuple(&constants, vars.len(), &mut |values| {
                let body_holds = rule
                    .body
                    .iter()
                    .all(|b| previous.contains(&instantiate(b, &vars, values)));
                if body_holds {
                    let head = instantiate(&rule.head, &vars, values);
                    if !previous.contains(&head) {
                        added.push(head);
                    }
                }
            });
        }
        if added.is_empty() {
            return Ok(known);
        }
        for atom in added {
            known.entry(atom).or_insert(round);
        }
        if known.len() > cap {
            return Err(OracleError::ResourceCap { cap });
        }
    }
}

/// The minimal model of a statement set, computed without semi-naive tricks.
pub fn naive_fixpoint<'a>(
    statements: impl IntoIterator<Item = &'a Statement>,
) -> Result<BTreeSet<Atom>, OracleError> {
    naive_fixpoint_with_cap(statements, DEFAULT_MAX_FIXPOINT)
}

pub fn naive_fixpoint_with_cap<'a>(
    statements: impl IntoIterator<Item = &'a Statement>,
    cap: usize,
) -> Result<BTreeSet<Atom>, OracleError> {
    let statements: Vec<&Statement> = statements.into_iter().collect();
    Ok(naive_rounds(&statements, cap)?.into_keys().collect())
}

/// Shortest derivation height of every atom in the minimal model (0 for facts).
pub fn naive_depths<'a>(
    statements: impl IntoIterator<Item = &'a Statement>,
) -> Result<BTreeMap<Atom, usize>, OracleError> {
    let statements: Vec<&Statement> = statements.into_iter().collect();
    naive_rounds(&statements, DEFAULT_MAX_FIXPOINT)
}

/// Whether `o1 ∪ h` makes the triple's conclusion true under the closed-world
/// reading (a negated conclusion holds iff the atom is not derivable).
pub fn validate_triple(triple: &AbductiveTriple) -> Result<bool, OracleError> {
    if matches!(triple.provenance, Provenance::Art { .. }) {
        return Err(OracleError::NotCheckable(triple.id.clone()));
    }
    let fixpoint = naive_fixpoint(triple.o1.iter().chain(&triple.h))?;
    let derivable = fixpoint.contains(&triple.o2);
    Ok(derivable != triple.o2_negated)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Disagreement {
    pub id: String,
    /// Label as emitted by the generator.
    pub engine: u8,
    pub oracle: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct ValidationReport {
    pub checked: usize,
    pub agreed: usize,
    /// Samples with no symbolic payload to check.
    pub skipped: usize,
    pub disagreements: Vec<Disagreement>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.disagreements.is_empty()
    }

    fn record(&mut self, id: &str, label: Label, verdict: bool) {
        self.checked += 1;
        let oracle = Label::from(verdict);
        if oracle == label {
            self.agreed += 1;
        } else {
            self.disagreements.push(Disagreement {
                id: id.to_string(),
                engine: label.as_u8(),
                oracle: oracle.as_u8(),
            });
        }
    }

    /// Single-line JSON summary.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "checked\t{}", self.checked)?;
        writeln!(f, "agreed\t{}", self.agreed)?;
        writeln!(f, "skipped\t{}", self.skipped)?;
        writeln!(f, "disagreements\t{}", self.disagreements.len())?;
        for d in &self.disagreements {
            writeln!(f, "disagree\t{}\tlabel={}\toracle={}", d.id, d.engine, d.oracle)?;
        }
        Ok(())
    }
}

/// Checks every triple's label against the oracle.
pub fn validate_triples<'a>(
    triples: impl IntoIterator<Item = &'a AbductiveTriple>,
) -> Result<ValidationReport, OracleError> {
    let mut report = ValidationReport::default();
    for triple in triples {
        match validate_triple(triple) {
            Ok(verdict) => report.record(&triple.id, triple.label, verdict),
            Err(OracleError::NotCheckable(_)) => report.skipped += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(report)
}

/// Checks rendered samples' labels against the oracle verdict of the
/// symbolic triple sharing their id. Samples without one are skipped.
pub fn validate_samples(
    samples: &[Sample],
    triples: &[AbductiveTriple],
) -> Result<ValidationReport, OracleError> {
    let by_id: BTreeMap<&str, &AbductiveTriple> =
        triples.iter().map(|t| (t.id.as_str(), t)).collect();
    let mut report = ValidationReport::default();
    for sample in samples {
        let Some(triple) = by_id.get(sample.id.as_str()) else {
            report.skipped += 1;
            continue;
        };
        match validate_triple(triple) {
            Ok(verdict) => report.record(&sample.id, sample.label, verdict),
            Err(OracleError::NotCheckable(_)) => report.skipped += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parse_theory;

    fn statements(src: &str) -> Vec<Statement> {
        parse_theory(src).unwrap().statements().collect()
    }

    #[test]
    fn single_rule() {
        let s = statements("fact p(a). rule p(X) => q(X).");
        let fix = naive_fixpoint(&s).unwrap();
        assert_eq!(
            fix,
            BTreeSet::from([Atom::ground("p", &["a"]), Atom::ground("q", &["a"])])
        );
    }

    #[test]
    fn empty_input() {
        assert!(naive_fixpoint(&[]).unwrap().is_empty());
    }

    #[test]
    fn rules_without_facts_derive_nothing() {
        let s = statements("rule p(X) => q(X). rule q(X) & r(X,Y) => p(Y).");
        assert!(naive_fixpoint(&s).unwrap().is_empty());
    }

    #[test]
    fn depths_count_rounds() {
        let s = statements("fact p(a). rule p(X) => q(X). rule q(X) => r(X). rule p(X) => s(X).");
        let d = naive_depths(&s).unwrap();
        assert_eq!(d[&Atom::ground("r", &["a"])], 2);
        assert_eq!(d[&Atom::ground("s", &["a"])], 1);
        assert_eq!(d[&Atom::ground("p", &["a"])], 0);
    }

    #[test]
    fn cap_applies() {
        let s = statements("fact n(a). fact n(b). rule n(X) & n(Y) => pair(X,Y).");
        assert_eq!(
            naive_fixpoint_with_cap(&s, 3),
            Err(OracleError::ResourceCap { cap: 3 })
        );
    }
}
