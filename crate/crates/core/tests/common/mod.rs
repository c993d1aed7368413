#![allow(dead_code)]

use std::collections::BTreeMap;

use abduct_core::logic::{Arity, Atom, Rule, Term, Theory};
use proptest::prelude::*;

pub const CONSTANTS: [&str; 5] = ["a", "b", "c", "d", "e"];
pub const PREDICATES: [(&str, Arity); 6] = [
    ("p", Arity::Unary),
    ("q", Arity::Unary),
    ("r", Arity::Unary),
    ("s", Arity::Unary),
    ("e", Arity::Binary),
    ("f", Arity::Binary),
];
const VARS: [&str; 3] = ["X", "Y", "Z"];

/// Raw atom draw: predicate index and two argument codes.
type RawAtom = (usize, u8, u8);

fn body_term(code: u8, n_constants: usize) -> Term {
    // Mostly variables, with an occasional constant.
    let code = code as usize % 8;
    if code < 6 {
        Term::Var(VARS[code % 3].to_string())
    } else {
        Term::Const(CONSTANTS[code % n_constants].to_string())
    }
}

fn atom(raw: RawAtom, term: impl Fn(u8) -> Term) -> Atom {
    let (pred, arity) = PREDICATES[raw.0 % PREDICATES.len()];
    let args = match arity {
        Arity::Unary => vec![term(raw.1)],
        Arity::Binary => vec![term(raw.1), term(raw.2)],
    };
    Atom::new(pred, args)
}

fn build(
    n_constants: usize,
    facts: Vec<RawAtom>,
    rules: Vec<(Vec<RawAtom>, RawAtom)>,
) -> Theory {
    let consts = &CONSTANTS[..n_constants];
    let facts: Vec<Atom> = facts
        .into_iter()
        .map(|raw| atom(raw, |c| Term::Const(consts[c as usize % n_constants].to_string())))
        .collect();
    let mut built = Vec::new();
    for (body_raw, head_raw) in rules {
        let body: Vec<Atom> = body_raw
            .into_iter()
            .map(|raw| atom(raw, |c| body_term(c, n_constants)))
            .collect();
        // Head arguments come from the body, which keeps rules range restricted.
        let pool: Vec<Term> = body.iter().flat_map(|a| a.args.iter().cloned()).collect();
        let head = atom(head_raw, |c| pool[c as usize % pool.len()].clone());
        let id = format!("r{}", built.len());
        built.push(Rule::new(id, body, head).expect("range restricted by construction"));
    }
    let predicates: BTreeMap<String, Arity> =
        PREDICATES.iter().map(|(p, a)| (p.to_string(), *a)).collect();
    Theory::from_parts(predicates, built, facts).expect("well formed by construction")
}

fn raw_atom() -> impl Strategy<Value = RawAtom> {
    (0..PREDICATES.len(), any::<u8>(), any::<u8>())
}

/// Random theories with at most `max_constants` constants and `max_rules` rules.
pub fn theories(max_constants: usize, max_rules: usize) -> impl Strategy<Value = Theory> {
    (
        1..=max_constants,
        prop::collection::vec(raw_atom(), 1..8),
        prop::collection::vec(
            (prop::collection::vec(raw_atom(), 1..=3), raw_atom()),
            0..=max_rules,
        ),
    )
        .prop_map(|(n, facts, rules)| build(n, facts, rules))
}
