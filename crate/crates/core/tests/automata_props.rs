mod common;

use std::collections::BTreeSet;

use common::*;
use omegacfg::automata::UpWord;
use omegacfg::determinize::determinize;
use omegacfg::text::{parse_dpa, parse_nba, write_dpa, write_nba};
use proptest::prelude::*;

fn letters(k: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(0..k, 0..6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn step_sets_flag_each_target_once(seed in any::<u64>(), w in letters(2)) {
        let mut r = rng(seed);
        let a = random_nba(&mut r, 3, 2, 0.4);
        for q in 0..a.num_states() {
            let steps = a.step_sets(q, &w).unwrap();
            let targets: BTreeSet<usize> = steps.iter().map(|s| s.0).collect();
            prop_assert_eq!(targets.len(), steps.len());
            if w.is_empty() {
                prop_assert_eq!(steps, vec![(q, false)]);
                continue;
            }
            // the flag is set exactly when some run visits a final state
            let runs = runs(&a, q, &w);
            for (p, f) in steps {
                prop_assert!(runs.contains(&(p, f)));
                prop_assert!(f || !runs.contains(&(p, true)));
            }
        }
    }

    #[test]
    fn nba_membership_matches_oracle(seed in any::<u64>(), u in letters(2), v in letters(2)) {
        prop_assume!(!v.is_empty());
        let mut r = rng(seed);
        let a = random_nba(&mut r, 3, 2, 0.4);
        let w = UpWord::new(u.clone(), v.clone()).unwrap();
        prop_assert_eq!(a.accepts_up(&w).unwrap(), accepts_up_oracle(&a, &u, &v));
    }

    #[test]
    fn dpa_step_priorities_compose_by_max(seed in any::<u64>(), u in letters(2), v in letters(2)) {
        prop_assume!(!u.is_empty() && !v.is_empty());
        let mut r = rng(seed);
        let d = determinize(&random_nba(&mut r, 3, 2, 0.4)).unwrap().dpa;
        let uv: Vec<usize> = u.iter().chain(&v).copied().collect();
        for q in 0..d.num_states() {
            let (p, i) = d.step(q, &u).unwrap();
            let (p2, j) = d.step(p, &v).unwrap();
            prop_assert_eq!(d.step(q, &uv).unwrap(), (p2, i.max(j)));
        }
    }

    #[test]
    fn automaton_text_round_trip(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = random_nba(&mut r, 3, 2, 0.4);
        prop_assert_eq!(parse_nba(&write_nba(&a)).unwrap(), a.clone());
        let d = determinize(&a).unwrap().dpa;
        prop_assert_eq!(parse_dpa(&write_dpa(&d)).unwrap(), d);
    }
}

#[test]
fn pruning_keeps_the_language() {
    let mut r = rng(11);
    for _ in 0..30 {
        let a = random_nba(&mut r, 4, 2, 0.3);
        let p = a.prune_unreachable();
        assert!(p.num_states() <= a.num_states());
        for _ in 0..50 {
            let u = random_word(&mut r, 2, 4);
            let mut v = random_word(&mut r, 2, 4);
            v.push(0);
            let w = UpWord::new(u, v).unwrap();
            assert_eq!(p.accepts_up(&w).unwrap(), a.accepts_up(&w).unwrap());
        }
    }
}
