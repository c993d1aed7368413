//! Function-free definite clauses over a finite constant universe.
//!
//! Atoms have arity 1 or 2. A [`Theory`] bundles declared predicates, ground
//! facts and range-restricted rules; as a definite program it always has a
//! unique minimal model, which is what the chaining engine computes.

mod parser;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub use parser::{parse_theory, parse_theory_with, ParseOptions};

/// A line/column location in rule-language source, both 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Position {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

/// Optional location prefix for error messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct At(pub Option<Position>);

impl fmt::Display for At {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(pos) => write!(f, "{pos}: "),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LogicError {
    #[error("{pos}: syntax error: {message}")]
    Syntax { pos: Position, message: String },
    #[error("{at}undeclared predicate `{name}`")]
    UndeclaredPredicate { name: String, at: At },
    #[error("{at}arity mismatch for `{name}`: declared {expected}, found {found}")]
    ArityMismatch {
        name: String,
        expected: usize,
        found: usize,
        at: At,
    },
    #[error("{at}rule is not range-restricted: variable `{variable}` in head does not occur in body")]
    NotRangeRestricted { variable: String, at: At },
    #[error("{at}fact `{atom}` is not ground")]
    NonGroundFact { atom: String, at: At },
    #[error("duplicate rule id `{0}`")]
    DuplicateRuleId(String),
    #[error("malformed statement `{0}`")]
    MalformedStatement(String),
}

/// Number of arguments a predicate takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Arity {
    Unary,
    Binary,
}

impl Arity {
    pub fn count(self) -> usize {
        match self {
            Arity::Unary => 1,
            Arity::Binary => 2,
        }
    }

    pub fn from_count(n: usize) -> Option<Arity> {
        match n {
            1 => Some(Arity::Unary),
            2 => Some(Arity::Binary),
            _ => None,
        }
    }
}

impl fmt::Display for Arity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.count())
    }
}

/// A constant (lowercase-initial) or a variable (uppercase-initial).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Const(String),
    Var(String),
}

impl Term {
    /// Classifies a bare identifier by its initial character.
    pub fn from_name(name: &str) -> Term {
        if is_var_name(name) {
            Term::Var(name.to_string())
        } else {
            Term::Const(name.to_string())
        }
    }

    pub fn as_const(&self) -> Option<&str> {
        match self {
            Term::Const(c) => Some(c),
            Term::Var(_) => None,
        }
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Const(s) | Term::Var(s) => f.write_str(s),
        }
    }
}

pub(crate) fn is_var_name(name: &str) -> bool {
    name.starts_with(|c: char| c.is_ascii_uppercase() || c == '_')
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: impl Into<String>, args: Vec<Term>) -> Atom {
        Atom {
            predicate: predicate.into(),
            args,
        }
    }

    /// Builds a ground atom from constant names.
    pub fn ground(predicate: impl Into<String>, constants: &[&str]) -> Atom {
        Atom::new(
            predicate,
            constants.iter().map(|c| Term::Const(c.to_string())).collect(),
        )
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(|t| matches!(t, Term::Const(_)))
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.args.iter().filter_map(Term::as_var)
    }

    pub fn constants(&self) -> impl Iterator<Item = &str> {
        self.args.iter().filter_map(Term::as_const)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.predicate)?;
        for (i, arg) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{arg}")?;
        }
        f.write_str(")")
    }
}

/// A definite clause `body_1 & ... & body_n => head`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rule {
    pub id: String,
    pub body: Vec<Atom>,
    pub head: Atom,
}

impl Rule {
    /// Checks the body is nonempty and every head variable occurs in it.
    pub fn new(id: impl Into<String>, body: Vec<Atom>, head: Atom) -> Result<Rule, LogicError> {
        let rule = Rule {
            id: id.into(),
            body,
            head,
        };
        rule.check_range_restricted()?;
        Ok(rule)
    }

    pub(crate) fn check_range_restricted(&self) -> Result<(), LogicError> {
        if self.body.is_empty() {
            return Err(LogicError::MalformedStatement(format!(
                "rule `{}` has an empty body",
                self.id
            )));
        }
        let bound: BTreeSet<&str> = self.body.iter().flat_map(Atom::variables).collect();
        match self.head.variables().find(|v| !bound.contains(v)) {
            Some(v) => Err(LogicError::NotRangeRestricted {
                variable: v.to_string(),
                at: At(None),
            }),
            None => Ok(()),
        }
    }

    /// Body variables in sorted order.
    pub fn variables(&self) -> BTreeSet<&str> {
        self.body.iter().flat_map(Atom::variables).collect()
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, atom) in self.body.iter().enumerate() {
            if i > 0 {
                f.write_str(" & ")?;
            }
            write!(f, "{atom}")?;
        }
        write!(f, " => {}", self.head)
    }
}

/// Either a ground fact or a rule; the unit O₁ and H are built from.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Statement {
    Fact(Atom),
    Rule(Rule),
}

impl Statement {
    pub fn as_fact(&self) -> Option<&Atom> {
        match self {
            Statement::Fact(a) => Some(a),
            Statement::Rule(_) => None,
        }
    }

    pub fn as_rule(&self) -> Option<&Rule> {
        match self {
            Statement::Rule(r) => Some(r),
            Statement::Fact(_) => None,
        }
    }
}

/// Facts print as `p(a)`, rules as `id: p(X) => q(X)`.
impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Statement::Fact(a) => write!(f, "{a}"),
            Statement::Rule(r) => write!(f, "{}: {r}", r.id),
        }
    }
}

impl FromStr for Statement {
    type Err = LogicError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let malformed = || LogicError::MalformedStatement(s.to_string());
        if s.contains("=>") {
            let (id, rest) = s.split_once(':').ok_or_else(malformed)?;
            let theory = parse_theory(&format!("rule {rest}."))?;
            let mut rule = theory.rules.into_iter().next().ok_or_else(malformed)?;
            rule.id = id.trim().to_string();
            Ok(Statement::Rule(rule))
        } else {
            let theory = parse_theory(&format!("fact {s}."))?;
            let fact = theory.facts.into_iter().next().ok_or_else(malformed)?;
            Ok(Statement::Fact(fact))
        }
    }
}

impl Serialize for Statement {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Statement {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl Serialize for Atom {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Atom {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        match String::deserialize(deserializer)?.parse::<Statement>() {
            Ok(Statement::Fact(a)) => Ok(a),
            Ok(Statement::Rule(r)) => Err(serde::de::Error::custom(format!(
                "expected a ground atom, found rule `{r}`"
            ))),
            Err(e) => Err(serde::de::Error::custom(e)),
        }
    }
}

/// A rule set plus ground facts over declared predicates.
///
/// `constants` is the set of constants occurring in facts and rules; the
/// text form has no constant declarations, so this is what survives a
/// render/parse round trip. Rule ids are positional (`r0`, `r1`, ...) in
/// the text form.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Theory {
    pub predicates: BTreeMap<String, Arity>,
    pub constants: BTreeSet<String>,
    pub rules: Vec<Rule>,
    pub facts: BTreeSet<Atom>,
}

impl Theory {
    /// Assembles a theory, implicitly declaring predicates at first use.
    pub fn from_parts(
        predicates: BTreeMap<String, Arity>,
        rules: Vec<Rule>,
        facts: impl IntoIterator<Item = Atom>,
    ) -> Result<Theory, LogicError> {
        let mut theory = Theory {
            predicates,
            constants: BTreeSet::new(),
            rules,
            facts: facts.into_iter().collect(),
        };
        let mut seen_ids = BTreeSet::new();
        for rule in &theory.rules {
            if !seen_ids.insert(rule.id.as_str()) {
                return Err(LogicError::DuplicateRuleId(rule.id.clone()));
            }
            rule.check_range_restricted()?;
        }
        for fact in &theory.facts {
            if !fact.is_ground() {
                return Err(LogicError::NonGroundFact {
                    atom: fact.to_string(),
                    at: At(None),
                });
            }
        }
        let atoms: Vec<Atom> = theory
            .facts
            .iter()
            .chain(theory.rules.iter().flat_map(|r| r.body.iter().chain([&r.head])))
            .cloned()
            .collect();
        for atom in &atoms {
            declare(&mut theory.predicates, atom, None)?;
            theory
                .constants
                .extend(atom.constants().map(str::to_string));
        }
        Ok(theory)
    }

    /// Builds the self-contained theory of a statement set.
    pub fn from_statements<'a>(
        statements: impl IntoIterator<Item = &'a Statement>,
    ) -> Result<Theory, LogicError> {
        let mut rules = Vec::new();
        let mut facts = Vec::new();
        for stmt in statements {
            match stmt {
                Statement::Fact(a) => facts.push(a.clone()),
                Statement::Rule(r) => rules.push(r.clone()),
            }
        }
        // Identical rules may arrive twice under one id from different sources.
        rules.sort();
        rules.dedup();
        Theory::from_parts(BTreeMap::new(), rules, facts)
    }

    pub fn arity_of(&self, predicate: &str) -> Option<Arity> {
        self.predicates.get(predicate).copied()
    }

    /// Every well-formed ground atom over the declared predicates and known
    /// constants, in sorted order.
    pub fn ground_atoms(&self) -> Vec<Atom> {
        let consts: Vec<&str> = self.constants.iter().map(String::as_str).collect();
        let mut out = Vec::new();
        for (pred, arity) in &self.predicates {
            match arity {
                Arity::Unary => out.extend(consts.iter().map(|c| Atom::ground(pred.clone(), &[c]))),
                Arity::Binary => {
                    for a in &consts {
                        out.extend(consts.iter().map(|b| Atom::ground(pred.clone(), &[a, b])));
                    }
                }
            }
        }
        out
    }

    pub fn statements(&self) -> impl Iterator<Item = Statement> + '_ {
        self.facts
            .iter()
            .cloned()
            .map(Statement::Fact)
            .chain(self.rules.iter().cloned().map(Statement::Rule))
    }

    /// Renders the theory in the rule language accepted by [`parse_theory`].
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (name, arity) in &self.predicates {
            out.push_str(&format!("pred {name}/{arity}.\n"));
        }
        for fact in &self.facts {
            out.push_str(&format!("fact {fact}.\n"));
        }
        for rule in &self.rules {
            out.push_str(&format!("rule {rule}.\n"));
        }
        out
    }
}

pub(crate) fn declare(
    predicates: &mut BTreeMap<String, Arity>,
    atom: &Atom,
    pos: Option<Position>,
) -> Result<(), LogicError> {
    let found = atom.arity();
    let Some(arity) = Arity::from_count(found) else {
        return Err(LogicError::ArityMismatch {
            name: atom.predicate.clone(),
            expected: predicates.get(&atom.predicate).map_or(1, |a| a.count()),
            found,
            at: At(pos),
        });
    };
    match predicates.get(&atom.predicate) {
        Some(&declared) if declared != arity => Err(LogicError::ArityMismatch {
            name: atom.predicate.clone(),
            expected: declared.count(),
            found,
            at: At(pos),
        }),
        Some(_) => Ok(()),
        None => {
            predicates.insert(atom.predicate.clone(), arity);
            Ok(())
        }
    }
}

/// A variable-to-constant binding. Ordering compares bound constants in
/// variable-name order.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Substitution(pub BTreeMap<String, String>);

impl Substitution {
    pub fn new() -> Substitution {
        Substitution::default()
    }

    pub fn get(&self, var: &str) -> Option<&str> {
        self.0.get(var).map(String::as_str)
    }

    pub fn bind(&mut self, var: impl Into<String>, constant: impl Into<String>) {
        self.0.insert(var.into(), constant.into());
    }

    /// Instantiates an atom; `None` if some variable is unbound.
    pub fn apply(&self, atom: &Atom) -> Option<Atom> {
        let args = atom
            .args
            .iter()
            .map(|t| match t {
                Term::Const(c) => Some(Term::Const(c.clone())),
                Term::Var(v) => self.get(v).map(|c| Term::Const(c.to_string())),
            })
            .collect::<Option<Vec<_>>>()?;
        Some(Atom::new(atom.predicate.clone(), args))
    }

    /// Extends `self` so that `pattern` instantiates to `ground`.
    fn unify(&mut self, pattern: &Atom, ground: &Atom) -> bool {
        if pattern.predicate != ground.predicate || pattern.args.len() != ground.args.len() {
            return false;
        }
        for (p, g) in pattern.args.iter().zip(&ground.args) {
            let Term::Const(value) = g else { return false };
            match p {
                Term::Const(c) if c != value => return false,
                Term::Const(_) => {}
                Term::Var(v) => match self.0.get(v) {
                    Some(bound) if bound != value => return false,
                    Some(_) => {}
                    None => {
                        self.0.insert(v.clone(), value.clone());
                    }
                },
            }
        }
        true
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (v, c)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v}->{c}")?;
        }
        f.write_str("}")
    }
}

/// Ground atoms grouped by predicate, each group sorted.
#[derive(Debug, Clone, Default)]
pub struct AtomIndex {
    by_predicate: HashMap<String, Vec<Atom>>,
}

impl AtomIndex {
    pub fn new() -> AtomIndex {
        AtomIndex::default()
    }

    pub fn from_atoms<'a>(atoms: impl IntoIterator<Item = &'a Atom>) -> AtomIndex {
        let mut index = AtomIndex::new();
        for atom in atoms {
            index.insert(atom.clone());
        }
        index.sort();
        index
    }

    pub fn insert(&mut self, atom: Atom) {
        self.by_predicate
            .entry(atom.predicate.clone())
            .or_default()
            .push(atom);
    }

    pub fn extend(&mut self, other: &AtomIndex) {
        for (pred, atoms) in &other.by_predicate {
            self.by_predicate
                .entry(pred.clone())
                .or_default()
                .extend(atoms.iter().cloned());
        }
        self.sort();
    }

    pub fn sort(&mut self) {
        for atoms in self.by_predicate.values_mut() {
            atoms.sort();
            atoms.dedup();
        }
    }

    pub fn get(&self, predicate: &str) -> &[Atom] {
        self.by_predicate.get(predicate).map_or(&[], Vec::as_slice)
    }

    pub fn is_empty(&self) -> bool {
        self.by_predicate.values().all(Vec::is_empty)
    }
}

/// Enumerates body matches, drawing candidates for body position `i` from
/// `source(i)`. Results are appended in backtracking order.
pub(crate) fn join_body<'a>(
    body: &[Atom],
    source: &dyn Fn(usize) -> &'a AtomIndex,
    out: &mut Vec<Substitution>,
) {
    fn go<'a>(
        body: &[Atom],
        i: usize,
        subst: &Substitution,
        source: &dyn Fn(usize) -> &'a AtomIndex,
        out: &mut Vec<Substitution>,
    ) {
        if i == body.len() {
            out.push(subst.clone());
            return;
        }
        for candidate in source(i).get(&body[i].predicate) {
            let mut next = subst.clone();
            if next.unify(&body[i], candidate) {
                go(body, i + 1, &next, source, out);
            }
        }
    }
    go(body, 0, &Substitution::new(), source, out);
}

/// Every substitution under which all body atoms of `rule` are in `facts`,
/// sorted lexicographically by bound constants.
pub fn ground_match(rule: &Rule, facts: &BTreeSet<Atom>) -> Vec<Substitution> {
    let index = AtomIndex::from_atoms(facts);
    let mut out = Vec::new();
    join_body(&rule.body, &|_| &index, &mut out);
    out.sort();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rule(src: &str) -> Rule {
        parse_theory(&format!("rule {src}."))
            .unwrap()
            .rules
            .remove(0)
    }

    #[test]
    fn match_single_fact() {
        let r = rule("smart(X) => rich(X)");
        let facts = BTreeSet::from([Atom::ground("smart", &["john"])]);
        let subs = ground_match(&r, &facts);
        assert_eq!(subs.len(), 1);
        assert_eq!(subs[0].get("X"), Some("john"));
        assert_eq!(subs[0].apply(&r.head), Some(Atom::ground("rich", &["john"])));
    }

    #[test]
    fn match_empty_facts() {
        let r = rule("smart(X) => rich(X)");
        assert!(ground_match(&r, &BTreeSet::new()).is_empty());
    }

    #[test]
    fn repeated_variable_must_agree() {
        let r = rule("knows(X,X) => lonely(X)");
        let facts = BTreeSet::from([
            Atom::ground("knows", &["a", "b"]),
            Atom::ground("knows", &["c", "c"]),
        ]);
        let subs = ground_match(&r, &facts);
        assert_eq!(subs.len(), 1);
        assert_eq!(subs[0].get("X"), Some("c"));
    }

    #[test]
    fn join_across_atoms() {
        let r = rule("parent(X,Y) & parent(Y,Z) => grand(X,Z)");
        let facts = BTreeSet::from([
            Atom::ground("parent", &["a", "b"]),
            Atom::ground("parent", &["b", "c"]),
            Atom::ground("parent", &["b", "d"]),
        ]);
        let heads: Vec<String> = ground_match(&r, &facts)
            .iter()
            .map(|s| s.apply(&r.head).unwrap().to_string())
            .collect();
        assert_eq!(heads, vec!["grand(a,c)", "grand(a,d)"]);
    }

    #[test]
    fn range_restriction_checked() {
        let err = Rule::new(
            "r0",
            vec![Atom::new("happy", vec![Term::Var("X".into())])],
            Atom::new("smart", vec![Term::Var("Y".into())]),
        )
        .unwrap_err();
        assert!(matches!(err, LogicError::NotRangeRestricted { ref variable, .. } if variable == "Y"));
    }

    #[test]
    fn statement_text_round_trip() {
        for src in ["smart(john)", "r4: knows(X,Y) & smart(Y) => likes(X,Y)"] {
            let stmt: Statement = src.parse().unwrap();
            assert_eq!(stmt.to_string(), src);
        }
        assert!("r1: smart(X) => rich(Y)".parse::<Statement>().is_err());
        assert!("smart(X)".parse::<Statement>().is_err());
    }

    #[test]
    fn ground_atoms_cover_universe() {
        let t = parse_theory("fact p(a). fact q(a,b).").unwrap();
        // p over {a,b} plus q over {a,b}^2
        assert_eq!(t.ground_atoms().len(), 2 + 4);
    }

    #[test]
    fn duplicate_rule_ids_rejected() {
        let r = rule("p(X) => q(X)");
        let err = Theory::from_parts(BTreeMap::new(), vec![r.clone(), r], []).unwrap_err();
        assert_eq!(err, LogicError::DuplicateRuleId("r0".into()));
    }
}
