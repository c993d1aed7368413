//! Deterministic English rendering of atoms, rules and triples.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::dataset::Sample;
use crate::forge::AbductiveTriple;
use crate::logic::{Arity, Atom, Rule, Statement, Term};

const BUILTIN_TEMPLATES: &str = include_str!("../data/templates.txt");
const BUILTIN_NAMES: &str = include_str!("../data/names.txt");

const NEGATION: &str = "It is not the case that {}";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RenderError {
    #[error("no template for predicate `{0}`")]
    MissingTemplate(String),
    #[error("template line {line}: {message}")]
    BadTemplate { line: usize, message: String },
    #[error("word list line {line}: {message}")]
    BadWord { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredicateTemplate {
    pub arity: Arity,
    /// Sentence pattern with `{0}` (and `{1}`) slots, starting with `{0}`.
    pub pattern: String,
    /// Prenominal form for "Every <adjective> person ..." rule sentences.
    pub adjective: Option<String>,
}

impl PredicateTemplate {
    /// The pattern with its leading subject slot removed.
    fn predicate_phrase(&self) -> &str {
        self.pattern.trim_start_matches("{0}").trim_start()
    }
}

/// Per-predicate sentence templates plus the negation wrapper.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    pub predicates: BTreeMap<String, PredicateTemplate>,
    /// Wrapper applied to negated ground atoms; `{}` takes the sentence body.
    pub negation: String,
}

impl TemplateSet {
    pub fn builtin() -> TemplateSet {
        TemplateSet::parse(BUILTIN_TEMPLATES).expect("built-in templates are well formed")
    }

    /// Parses `name/arity = pattern [| adjective]` lines; `#` comments.
    pub fn parse(text: &str) -> Result<TemplateSet, RenderError> {
        let mut predicates = BTreeMap::new();
        let mut patterns = BTreeSet::new();
        let mut adjectives = BTreeSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let bad = |message: &str| RenderError::BadTemplate {
                line,
                message: message.to_string(),
            };
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, rest) = content.split_once('=').ok_or_else(|| bad("expected `name/arity = pattern`"))?;
            let (name, arity) = key.trim().split_once('/').ok_or_else(|| bad("expected `name/arity`"))?;
            let name = name.trim();
            if name.is_empty() || !name.starts_with(|c: char| c.is_ascii_lowercase()) {
                return Err(bad("predicate names must be lowercase-initial"));
            }
            let arity = match arity.trim() {
                "1" => Arity::Unary,
                "2" => Arity::Binary,
                _ => return Err(bad("arity must be 1 or 2")),
            };
            let (pattern, adjective) = match rest.split_once('|') {
                Some((p, a)) => (p.trim(), Some(a.trim().to_string())),
                None => (rest.trim(), None),
            };
            if !pattern.starts_with("{0} ") {
                return Err(bad("pattern must start with `{0} `"));
            }
            if (arity == Arity::Binary) != pattern.contains("{1}") {
                return Err(bad("`{1}` slot must appear exactly in binary patterns"));
            }
            if adjective.is_some() && arity == Arity::Binary {
                return Err(bad("adjectives apply to unary predicates only"));
            }
            if !patterns.insert(pattern.to_string()) {
                return Err(bad("duplicate pattern"));
            }
            if let Some(adj) = &adjective {
                if adj.is_empty() || !adjectives.insert(adj.clone()) {
                    return Err(bad("empty or duplicate adjective"));
                }
            }
            if predicates.contains_key(name) {
                return Err(bad("duplicate predicate"));
            }
            predicates.insert(
                name.to_string(),
                PredicateTemplate {
                    arity,
                    pattern: pattern.to_string(),
                    adjective,
                },
            );
        }
        Ok(TemplateSet {
            predicates,
            negation: NEGATION.to_string(),
        })
    }

    pub fn get(&self, predicate: &str) -> Result<&PredicateTemplate, RenderError> {
        self.predicates
            .get(predicate)
            .ok_or_else(|| RenderError::MissingTemplate(predicate.to_string()))
    }

    pub fn predicates_of(&self, arity: Arity) -> Vec<String> {
        self.predicates
            .iter()
            .filter(|(_, t)| t.arity == arity)
            .map(|(n, _)| n.clone())
            .collect()
    }

    /// Ground atom sentence without the final period.
    fn clause(&self, atom: &Atom) -> Result<String, RenderError> {
        let template = self.get(&atom.predicate)?;
        let mut text = template.pattern.clone();
        for (i, arg) in atom.args.iter().enumerate() {
            text = text.replace(&format!("{{{i}}}"), &term_text(arg));
        }
        Ok(text)
    }

    pub fn render_atom(&self, atom: &Atom, negated: bool) -> Result<String, RenderError> {
        let clause = self.clause(atom)?;
        let sentence = if negated {
            self.negation.replace("{}", &clause)
        } else {
            clause
        };
        Ok(format!("{}.", capitalize(&sentence)))
    }

    pub fn render_rule(&self, rule: &Rule) -> Result<String, RenderError> {
        if let [body] = rule.body.as_slice() {
            let single_var = |a: &Atom| matches!(a.args.as_slice(), [Term::Var(_)]);
            if single_var(body) && single_var(&rule.head) {
                let body_t = self.get(&body.predicate)?;
                let head_t = self.get(&rule.head.predicate)?;
                let text = match &body_t.adjective {
                    Some(adj) => format!("Every {adj} person {}.", head_t.predicate_phrase()),
                    None => format!(
                        "Every person who {} {}.",
                        body_t.predicate_phrase(),
                        head_t.predicate_phrase()
                    ),
                };
                return Ok(text);
            }
        }
        let body = rule
            .body
            .iter()
            .map(|a| self.clause(a))
            .collect::<Result<Vec<_>, _>>()?
            .join(" and ");
        Ok(format!("If {body}, then {}.", self.clause(&rule.head)?))
    }

    pub fn render_statement(&self, stmt: &Statement) -> Result<String, RenderError> {
        match stmt {
            Statement::Fact(a) => self.render_atom(a, false),
            Statement::Rule(r) => self.render_rule(r),
        }
    }

    /// Sentences for each statement in set order, space-joined.
    pub fn render_statements<'a>(
        &self,
        statements: impl IntoIterator<Item = &'a Statement>,
    ) -> Result<String, RenderError> {
        Ok(statements
            .into_iter()
            .map(|s| self.render_statement(s))
            .collect::<Result<Vec<_>, _>>()?
            .join(" "))
    }

    /// Maps O₁ to `obs1`, H to `hyp` and O₂ to `obs2`.
    pub fn render_triple(&self, triple: &AbductiveTriple) -> Result<Sample, RenderError> {
        Ok(Sample {
            id: triple.id.clone(),
            obs1: self.render_statements(&triple.o1)?,
            obs2: self.render_atom(&triple.o2, triple.o2_negated)?,
            hyp: self.render_statements(&triple.h)?,
            label: triple.label,
            provenance: triple.provenance.to_string(),
        })
    }
}

fn term_text(term: &Term) -> String {
    match term {
        Term::Const(c) => capitalize(c),
        Term::Var(v) => v.clone(),
    }
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Entity names and predicate pools the theory generator draws from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    pub names: Vec<String>,
    pub unary: Vec<String>,
    pub binary: Vec<String>,
}

impl Vocabulary {
    pub fn builtin() -> Vocabulary {
        Vocabulary::new(
            parse_word_list(BUILTIN_NAMES).expect("built-in names are well formed"),
            &TemplateSet::builtin(),
        )
    }

    pub fn new(names: Vec<String>, templates: &TemplateSet) -> Vocabulary {
        Vocabulary {
            names,
            unary: templates.predicates_of(Arity::Unary),
            binary: templates.predicates_of(Arity::Binary),
        }
    }
}

/// One lowercase word per line; blank lines and `#` comments ignored.
pub fn parse_word_list(text: &str) -> Result<Vec<String>, RenderError> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let word = raw.split('#').next().unwrap_or("").trim();
        if word.is_empty() {
            continue;
        }
        let valid = word.starts_with(|c: char| c.is_ascii_lowercase())
            && word.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
        if !valid {
            return Err(RenderError::BadWord {
                line: i + 1,
                message: format!("`{word}` is not a lowercase identifier"),
            });
        }
        if !seen.insert(word.to_string()) {
            return Err(RenderError::BadWord {
                line: i + 1,
                message: format!("duplicate word `{word}`"),
            });
        }
        out.push(word.to_string());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parse_theory;

    fn rule(src: &str) -> Rule {
        parse_theory(&format!("rule {src}.")).unwrap().rules.remove(0)
    }

    #[test]
    fn ground_sentences() {
        let t = TemplateSet::builtin();
        assert_eq!(t.render_atom(&Atom::ground("smart", &["john"]), false).unwrap(), "John is smart.");
        assert_eq!(
            t.render_atom(&Atom::ground("smartest", &["john"]), false).unwrap(),
            "John is the smartest person in the class."
        );
        assert_eq!(
            t.render_atom(&Atom::ground("likes", &["john", "mary"]), false).unwrap(),
            "John likes Mary."
        );
    }

    #[test]
    fn negated_sentence() {
        let t = TemplateSet::builtin();
        assert_eq!(
            t.render_atom(&Atom::ground("greencar", &["john"]), true).unwrap(),
            "It is not the case that John has a green car."
        );
    }

    #[test]
    fn rule_sentences() {
        let t = TemplateSet::builtin();
        assert_eq!(
            t.render_rule(&rule("smart(X) => greencar(X)")).unwrap(),
            "Every smart person has a green car."
        );
        assert_eq!(
            t.render_rule(&rule("smartest(X) => smart(X)")).unwrap(),
            "Every person who is the smartest person in the class is smart."
        );
        assert_eq!(
            t.render_rule(&rule("knows(X,Y) & smart(Y) => likes(X,Y)")).unwrap(),
            "If X knows Y and Y is smart, then X likes Y."
        );
        assert_eq!(
            t.render_rule(&rule("knows(X,Y) => likes(Y,X)")).unwrap(),
            "If X knows Y, then Y likes X."
        );
    }

    #[test]
    fn missing_template() {
        let t = TemplateSet::builtin();
        assert_eq!(
            t.render_atom(&Atom::ground("flies", &["tweety"]), false),
            Err(RenderError::MissingTemplate("flies".into()))
        );
    }

    #[test]
    fn template_file_errors() {
        assert!(TemplateSet::parse("p/1 = is p").is_err());
        assert!(TemplateSet::parse("p/3 = {0} p").is_err());
        assert!(TemplateSet::parse("p/2 = {0} p").is_err());
        assert!(TemplateSet::parse("p/1 = {0} p\nq/1 = {0} p").is_err());
        assert!(TemplateSet::parse("p/2 = {0} p {1} | pp").is_err());
        let ok = TemplateSet::parse("# c\n\np/1 = {0} is p | p\n").unwrap();
        assert_eq!(ok.predicates.len(), 1);
    }

    #[test]
    fn builtin_vocabulary() {
        let v = Vocabulary::builtin();
        assert!(v.names.len() >= 40);
        assert!(v.unary.len() >= 30);
        assert!(v.binary.len() >= 10);
        assert!(parse_word_list("a\nA\n").is_err());
        assert!(parse_word_list("a\na\n").is_err());
    }
}
