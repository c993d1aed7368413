mod common;

use std::collections::{BTreeMap, BTreeSet};

use abduct_core::chain::{chain_depth, saturate};
use abduct_core::logic::{ground_match, parse_theory, Atom, Rule, Statement, Substitution, Term, Theory};
use abduct_core::oracle::{naive_depths, naive_fixpoint};
use proptest::prelude::*;

fn statements(theory: &Theory) -> Vec<Statement> {
    theory.statements().collect()
}

/// Every assignment of the theory's constants to the rule's variables whose
/// instantiated body lies in `facts`.
fn brute_force_matches(rule: &Rule, facts: &BTreeSet<Atom>, constants: &[String]) -> Vec<Substitution> {
    let vars: Vec<&str> = rule.variables().into_iter().collect();
    let mut out = Vec::new();
    let mut tuple = vec![0usize; vars.len()];
    loop {
        let mut subst = Substitution::new();
        for (v, &i) in vars.iter().zip(&tuple) {
            subst.bind(*v, constants[i].clone());
        }
        if rule.body.iter().all(|b| facts.contains(&subst.apply(b).unwrap())) {
            out.push(subst);
        }
        // Odometer increment over the constant indices.
        let mut k = 0;
        loop {
            if k == tuple.len() {
                out.sort();
                return out;
            }
            tuple[k] += 1;
            if tuple[k] < constants.len() {
                break;
            }
            tuple[k] = 0;
            k += 1;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn saturate_matches_naive_fixpoint(theory in common::theories(5, 8)) {
        let dag = saturate(&theory).unwrap();
        let naive = naive_fixpoint(&statements(&theory)).unwrap();
        prop_assert_eq!(&dag.fixpoint, &naive);
    }

    #[test]
    fn depths_are_minimal_heights(theory in common::theories(5, 8)) {
        let dag = saturate(&theory).unwrap();
        let naive = naive_depths(&statements(&theory)).unwrap();
        for atom in &dag.fixpoint {
            prop_assert_eq!(chain_depth(&dag, atom), naive.get(atom).copied(), "{}", atom);
            prop_assert_eq!(chain_depth(&dag, atom) == Some(0), theory.facts.contains(atom));
        }
    }

    #[test]
    fn proof_steps_are_sound(theory in common::theories(5, 8)) {
        let dag = saturate(&theory).unwrap();
        let rules: BTreeMap<&str, &Rule> = theory.rules.iter().map(|r| (r.id.as_str(), r)).collect();
        for (atom, step) in &dag.steps {
            prop_assert_eq!(&step.derived, atom);
            let rule = rules[step.rule_id.as_str()];
            prop_assert_eq!(step.premises.len(), rule.body.len());
            let max_premise = step.premises.iter().map(|p| dag.depth(p).unwrap()).max().unwrap();
            prop_assert_eq!(step.depth, max_premise + 1);
            // Some match of the rule produces exactly these premises and head.
            let premises: BTreeSet<Atom> = step.premises.iter().cloned().collect();
            let found = ground_match(rule, &premises)
                .iter()
                .any(|s| s.apply(&rule.head).as_ref() == Some(atom)
                    && rule.body.iter().map(|b| s.apply(b).unwrap()).eq(step.premises.iter().cloned()));
            prop_assert!(found);
        }
    }

    #[test]
    fn fixpoint_is_monotone_and_idempotent(theory in common::theories(4, 6), extra in 0usize..5) {
        let dag = saturate(&theory).unwrap();
        let mut bigger = theory.clone();
        let atoms = theory.ground_atoms();
        bigger.facts.insert(atoms[extra % atoms.len()].clone());
        let bigger_dag = saturate(&bigger).unwrap();
        prop_assert!(dag.fixpoint.is_subset(&bigger_dag.fixpoint));

        let mut closed = theory.clone();
        closed.facts = dag.fixpoint.clone();
        let again = saturate(&closed).unwrap();
        prop_assert_eq!(&again.fixpoint, &dag.fixpoint);
        prop_assert!(again.steps.is_empty());
    }

    #[test]
    fn ground_match_agrees_with_brute_force(theory in common::theories(4, 6)) {
        let naive = naive_fixpoint(&statements(&theory)).unwrap();
        let constants: Vec<String> = theory.constants.iter().cloned().collect();
        for rule in &theory.rules {
            let engine = ground_match(rule, &naive);
            let brute = brute_force_matches(rule, &naive, &constants);
            prop_assert_eq!(engine, brute);
        }
    }

    #[test]
    fn render_parse_round_trip(theory in common::theories(5, 8)) {
        let text = theory.render();
        let parsed = parse_theory(&text).unwrap();
        prop_assert_eq!(&parsed, &theory);
        prop_assert_eq!(parsed.render(), text);
    }

    #[test]
    fn statement_round_trip(theory in common::theories(5, 8)) {
        for stmt in theory.statements() {
            let back: Statement = stmt.to_string().parse().unwrap();
            prop_assert_eq!(back, stmt);
        }
    }
}

#[test]
fn fifty_rule_theory_round_trips() {
    let mut text = String::from("fact p0(a). fact k(a,b).\n");
    for i in 0..50 {
        text.push_str(&format!("rule p{i}(X) & k(X,Y) => p{}(Y).\n", i + 1));
        text.push_str("rule k(X,Y) => k(Y,X).\n");
    }
    let theory = parse_theory(&text).unwrap();
    assert_eq!(theory.rules.len(), 100);
    assert_eq!(parse_theory(&theory.render()).unwrap(), theory);
    let dag = saturate(&theory).unwrap();
    let naive = naive_fixpoint(&statements(&theory)).unwrap();
    assert_eq!(dag.fixpoint, naive);
    // p_i alternates between a and b; p50 lands back on a at height 50.
    assert_eq!(dag.depth(&Atom::ground("p50", &["a"])), Some(50));
}

#[test]
fn constants_in_rule_bodies_restrict_matches() {
    let theory = parse_theory(
        "fact k(a,b). fact k(c,b). rule k(a,Y) => m(Y).",
    )
    .unwrap();
    let dag = saturate(&theory).unwrap();
    let derived: Vec<&Atom> = dag.steps.keys().collect();
    assert_eq!(derived, vec![&Atom::new("m", vec![Term::Const("b".into())])]);
}
