mod common;

use common::*;
use omegacfg::formulas::{Atom, Formula};
use proptest::prelude::*;

const STATES: u32 = 2;
const PRIOS: u32 = 3;

fn atom() -> impl Strategy<Value = Atom> {
    (0..STATES, 0..PRIOS).prop_map(|(state, prio)| Atom { state, prio })
}

fn raw_clauses() -> impl Strategy<Value = Vec<Vec<Atom>>> {
    prop::collection::vec(prop::collection::vec(atom(), 0..4), 0..5)
}

fn formula() -> impl Strategy<Value = Formula> {
    raw_clauses().prop_map(Formula::from_clauses)
}

fn family() -> impl Strategy<Value = Vec<Formula>> {
    prop::collection::vec(formula(), STATES as usize)
}

fn atoms() -> Vec<Atom> {
    (0..STATES)
        .flat_map(|state| (0..PRIOS).map(move |prio| Atom { state, prio }))
        .collect()
}

fn semantics(f: &Formula) -> Vec<bool> {
    assignments(&atoms())
        .iter()
        .map(|s| eval_clauses(f.clauses(), &|a: &Atom| s[a]))
        .collect()
}

fn implies_by_table(f: &Formula, g: &Formula) -> bool {
    semantics(f).iter().zip(semantics(g)).all(|(a, b)| !a || b)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn canonical_form_keeps_semantics(raw in raw_clauses()) {
        let canon = Formula::from_clauses(raw.clone());
        let rawf = Formula::from_clauses_raw(raw.clone());
        prop_assert_eq!(semantics(&canon), semantics(&rawf));
        prop_assert_eq!(Formula::from_clauses(canon.clauses().to_vec()), canon);
    }

    #[test]
    fn implies_is_a_preorder_and_equality_is_mutual_implication(f in formula(), g in formula(), h in formula()) {
        prop_assert!(f.implies(&f));
        if f.implies(&g) && g.implies(&h) {
            prop_assert!(f.implies(&h));
        }
        prop_assert_eq!(f.implies(&g), implies_by_table(&f, &g));
        prop_assert_eq!(f.implies(&g) && g.implies(&f), f == g);
    }

    #[test]
    fn composition_is_monotone(f in formula(), g in formula(), fam in family(), fam2 in family()) {
        // f ∧ g ⇒ f and each member ⇒ its disjunction with another
        let lower = f.conj(&g);
        let upper: Vec<Formula> = fam.iter().zip(&fam2).map(|(a, b)| a.disj(b)).collect();
        let left = lower.compose_family(|q| &fam[q]);
        let right = f.compose_family(|q| &upper[q]);
        prop_assert!(left.implies(&right));
    }

    #[test]
    fn shift_raises_priorities(f in formula(), j in 0..PRIOS) {
        let s = f.shift(j);
        for a in s.atoms() {
            prop_assert!(a.prio >= j);
        }
        let table = assignments(&atoms());
        for sigma in &table {
            let lifted = |a: &Atom| sigma[&Atom { state: a.state, prio: a.prio.max(j) }];
            prop_assert_eq!(
                eval_clauses(s.clauses(), &|a: &Atom| sigma[a]),
                eval_clauses(f.clauses(), &lifted)
            );
        }
    }

    #[test]
    fn attach_commutes_with_connectives(f in formula(), g in formula(), y in 0usize..3) {
        prop_assert_eq!(f.conj(&g).attach_nonterminal(y), f.attach_nonterminal(y).conj(&g.attach_nonterminal(y)));
        prop_assert_eq!(f.disj(&g).attach_nonterminal(y), f.attach_nonterminal(y).disj(&g.attach_nonterminal(y)));
    }

    #[test]
    fn choice_functions_hit_every_clause(f in formula()) {
        for c in f.choice_functions().take(64) {
            prop_assert_eq!(c.len(), f.clauses().len());
            for (atom, clause) in c.iter().zip(f.clauses()) {
                prop_assert!(clause.contains(atom));
            }
        }
    }
}

#[test]
fn constants() {
    assert!(Formula::tt().is_true() && Formula::ff().is_false());
    assert_eq!(Formula::ff().attach_nonterminal(0), omegacfg::formulas::ExtFormula::ff());
    assert!(Formula::ff().implies(&Formula::tt()));
    assert!(!Formula::tt().implies(&Formula::ff()));
}
