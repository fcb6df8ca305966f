//! Random instance generators and brute-force oracles shared by the
//! integration tests. None of the oracles call into the code they check.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use omegacfg::automata::Nba;
use omegacfg::boxes::TransitionBox;
use omegacfg::grammar::{Grammar, Owner, Rule, Symbol};
use omegacfg::paritygame::ParityGame;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

/// First state initial; each transition present with probability `density`.
pub fn random_nba(rng: &mut impl Rng, states: usize, letters: usize, density: f64) -> Nba {
    let finals: Vec<bool> = (0..states).map(|_| rng.gen_bool(0.4)).collect();
    let mut trans = Vec::new();
    for q in 0..states {
        for a in 0..letters {
            for p in 0..states {
                if rng.gen_bool(density) {
                    trans.push((q, a, p));
                }
            }
        }
    }
    Nba::new(names("q", states), names("l", letters), 0, finals, trans).unwrap()
}

/// Terminals are named like the alphabet of `random_nba` with the same count.
pub fn random_grammar(
    rng: &mut impl Rng,
    nonterminals: usize,
    terminals: usize,
    ownership: Option<Owner>,
) -> Grammar {
    let mut rules = Vec::new();
    for x in 0..nonterminals {
        for _ in 0..rng.gen_range(1..=3) {
            let len = rng.gen_range(0..=3);
            let mut rhs: Vec<Symbol> = (0..len)
                .map(|_| {
                    if rng.gen_bool(0.3) {
                        Symbol::Nonterminal(rng.gen_range(0..nonterminals))
                    } else {
                        Symbol::Terminal(rng.gen_range(0..terminals))
                    }
                })
                .collect();
            if rng.gen_bool(0.5) {
                rhs.push(Symbol::Nonterminal(rng.gen_range(0..nonterminals)));
            }
            rules.push(Rule::new(x, rhs));
        }
    }
    let own = ownership.map(|o| vec![o; nonterminals]);
    Grammar::new(names("N", nonterminals), names("l", terminals), rules, 0, own)
}

/// Random prover/refuter split.
pub fn random_ownership(rng: &mut impl Rng, g: Grammar) -> Grammar {
    let own = (0..g.nonterminals().len())
        .map(|_| if rng.gen_bool(0.5) { Owner::Prover } else { Owner::Refuter })
        .collect();
    g.with_ownership(Some(own))
}

/// All terminal words of length ≤ `max_len` per nonterminal, by fixpoint.
pub fn bounded_language(g: &Grammar, max_len: usize) -> Vec<BTreeSet<Vec<usize>>> {
    let n = g.nonterminals().len();
    let mut lang: Vec<BTreeSet<Vec<usize>>> = vec![BTreeSet::new(); n];
    loop {
        let mut changed = false;
        for r in g.rules() {
            let mut partial: BTreeSet<Vec<usize>> = [Vec::new()].into();
            for s in &r.rhs {
                let mut next = BTreeSet::new();
                for w in &partial {
                    match *s {
                        Symbol::Terminal(t) => {
                            if w.len() < max_len {
                                let mut v = w.clone();
                                v.push(t);
                                next.insert(v);
                            }
                        }
                        Symbol::Nonterminal(y) => {
                            for u in &lang[y] {
                                if w.len() + u.len() <= max_len {
                                    let mut v = w.clone();
                                    v.extend(u);
                                    next.insert(v);
                                }
                            }
                        }
                    }
                }
                partial = next;
            }
            for w in partial {
                changed |= lang[r.lhs].insert(w);
            }
        }
        if !changed {
            return lang;
        }
    }
}

/// Whether nonterminal `x` derives exactly `w`.
pub fn derives(g: &Grammar, x: usize, w: &[usize]) -> bool {
    let n = w.len();
    // d[y][i][j]: y derives w[i..j]
    let mut d = vec![vec![vec![false; n + 1]; n + 1]; g.nonterminals().len()];
    loop {
        let mut changed = false;
        for r in g.rules() {
            for i in 0..=n {
                // reach[j]: rhs prefix derives w[i..j]
                let mut reach = vec![false; n + 1];
                reach[i] = true;
                for s in &r.rhs {
                    let mut next = vec![false; n + 1];
                    for k in i..=n {
                        if !reach[k] {
                            continue;
                        }
                        match *s {
                            Symbol::Terminal(t) => {
                                if k < n && w[k] == t {
                                    next[k + 1] = true;
                                }
                            }
                            Symbol::Nonterminal(y) => {
                                for j in k..=n {
                                    if d[y][k][j] {
                                        next[j] = true;
                                    }
                                }
                            }
                        }
                    }
                    reach = next;
                }
                for j in i..=n {
                    if reach[j] && !d[r.lhs][i][j] {
                        d[r.lhs][i][j] = true;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            return d[x][0][n];
        }
    }
}

/// `(p, visited a final state)` pairs of all runs from `q` over `w`.
pub fn runs(a: &Nba, q: usize, w: &[usize]) -> BTreeSet<(usize, bool)> {
    let mut cur: BTreeSet<(usize, bool)> = [(q, a.is_final(q))].into();
    for &c in w {
        let mut next = BTreeSet::new();
        for &(s, f) in &cur {
            for &p in a.successors(s, c) {
                next.insert((p, f || a.is_final(p)));
            }
        }
        cur = next;
    }
    cur
}

/// Box of a word computed run by run.
pub fn box_oracle(a: &Nba, w: &[usize]) -> TransitionBox {
    if w.is_empty() {
        return TransitionBox::Id;
    }
    let mut triples = Vec::new();
    for q in 0..a.num_states() {
        let rs = runs(a, q, w);
        for &(p, f) in &rs {
            if f || !rs.contains(&(p, true)) {
                triples.push((q, p, f));
            }
        }
    }
    TransitionBox::from_triples(a.num_states(), &triples)
}

/// `u·v^ω` acceptance: some state reachable after `u·v^k` lies on a cycle of
/// `v`-blocks one of which visits a final state.
pub fn accepts_up_oracle(a: &Nba, u: &[usize], v: &[usize]) -> bool {
    assert!(!v.is_empty());
    let n = a.num_states();
    let block: Vec<BTreeSet<(usize, bool)>> = (0..n).map(|q| runs(a, q, v)).collect();
    let mut reach: BTreeSet<usize> = runs(a, a.initial(), u).into_iter().map(|(p, _)| p).collect();
    let mut frontier: Vec<usize> = reach.iter().copied().collect();
    while let Some(q) = frontier.pop() {
        for &(p, _) in &block[q] {
            if reach.insert(p) {
                frontier.push(p);
            }
        }
    }
    // a flagged block edge p -> p' with p' reaching p back
    let reaches = |from: usize, to: usize| -> bool {
        let mut seen = BTreeSet::from([from]);
        let mut stack = vec![from];
        while let Some(s) = stack.pop() {
            if s == to {
                return true;
            }
            for &(t, _) in &block[s] {
                if seen.insert(t) {
                    stack.push(t);
                }
            }
        }
        false
    };
    reach.iter().any(|&p| {
        block[p]
            .iter()
            .any(|&(p2, f)| f && reaches(p2, p))
    })
}

/// Finite-word acceptance by reaching a final state.
pub fn accepts_finite(a: &Nba, w: &[usize]) -> bool {
    runs(a, a.initial(), w).iter().any(|&(p, _)| a.is_final(p))
}

/// Winner of the finite-word game from `form` by exhaustive search. The
/// grammar must not admit infinite derivations within `depth` steps.
pub fn finite_game_winner(g: &Grammar, a: &Nba, form: &[Symbol], depth: usize) -> Owner {
    assert!(depth > 0, "finite game search ran out of depth");
    let Some(pos) = form.iter().position(|s| !s.is_terminal()) else {
        let w: Vec<usize> = form.iter().map(|s| s.as_terminal().unwrap()).collect();
        return if accepts_finite(a, &w) { Owner::Prover } else { Owner::Refuter };
    };
    let x = form[pos].as_nonterminal().unwrap();
    let owner = g.owner(x).unwrap();
    let results = g.rules_of(x).iter().map(|&r| {
        let mut next = form[..pos].to_vec();
        next.extend(&g.rule(r).rhs);
        next.extend(&form[pos + 1..]);
        finite_game_winner(g, a, &next, depth - 1)
    });
    let mut any = false;
    for w in results {
        if w == owner {
            any = true;
            break;
        }
    }
    if any { owner } else { owner.opponent() }
}

/// Max-even parity game winner per vertex by enumerating prover's positional
/// strategies and checking the refuter's one-player game for an odd cycle.
pub fn brute_force_parity(g: &ParityGame) -> Vec<Owner> {
    let n = g.len();
    let prover: Vec<usize> = (0..n).filter(|&v| g.owner(v) == Owner::Prover).collect();
    let mut win = vec![false; n];
    let mut choice = vec![0usize; prover.len()];
    loop {
        let mut succ: Vec<Vec<usize>> = (0..n).map(|v| g.successors(v).to_vec()).collect();
        for (i, &v) in prover.iter().enumerate() {
            succ[v] = vec![g.successors(v)[choice[i]]];
        }
        // vertices from which refuter reaches an odd-dominated cycle
        let mut bad_cycle = vec![false; n];
        for v in 0..n {
            let d = g.priority(v);
            if d % 2 == 1 {
                // v on a cycle within vertices of priority ≤ d
                let mut seen = vec![false; n];
                let mut stack: Vec<usize> = succ[v].iter().copied().filter(|&w| g.priority(w) <= d).collect();
                while let Some(w) = stack.pop() {
                    if seen[w] {
                        continue;
                    }
                    seen[w] = true;
                    for &x in &succ[w] {
                        if g.priority(x) <= d {
                            stack.push(x);
                        }
                    }
                }
                bad_cycle[v] = seen[v];
            }
        }
        for v in 0..n {
            if win[v] {
                continue;
            }
            let mut seen = vec![false; n];
            let mut stack = vec![v];
            let mut lost = false;
            while let Some(w) = stack.pop() {
                if seen[w] {
                    continue;
                }
                seen[w] = true;
                if bad_cycle[w] {
                    lost = true;
                    break;
                }
                stack.extend(&succ[w]);
            }
            if !lost {
                win[v] = true;
            }
        }
        // next strategy
        let mut i = 0;
        loop {
            if i == prover.len() {
                return win
                    .iter()
                    .map(|&w| if w { Owner::Prover } else { Owner::Refuter })
                    .collect();
            }
            choice[i] += 1;
            if choice[i] < g.successors(prover[i]).len() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}

pub fn random_parity_game(rng: &mut impl Rng, max_vertices: usize, max_prio: u32) -> ParityGame {
    let n = rng.gen_range(1..=max_vertices);
    let owner = (0..n)
        .map(|_| if rng.gen_bool(0.5) { Owner::Prover } else { Owner::Refuter })
        .collect();
    let prio = (0..n).map(|_| rng.gen_range(0..=max_prio)).collect();
    let succ = (0..n)
        .map(|_| {
            let k = rng.gen_range(1..=3.min(n));
            let mut s: Vec<usize> = (0..k).map(|_| rng.gen_range(0..n)).collect();
            s.sort_unstable();
            s.dedup();
            s
        })
        .collect();
    ParityGame::new(owner, prio, succ).unwrap()
}

/// Truth value of a clause list under `assign`.
pub fn eval_clauses<A>(clauses: &[Vec<A>], assign: &impl Fn(&A) -> bool) -> bool {
    clauses.iter().all(|c| c.iter().any(assign))
}

/// All assignments over `atoms`, as maps.
pub fn assignments<A: Ord + Clone>(atoms: &[A]) -> Vec<BTreeMap<A, bool>> {
    (0u32..1 << atoms.len())
        .map(|bits| {
            atoms
                .iter()
                .enumerate()
                .map(|(i, a)| (a.clone(), bits >> i & 1 == 1))
                .collect()
        })
        .collect()
}

/// Random words, letters below `letters`.
pub fn random_word(rng: &mut impl Rng, letters: usize, max_len: usize) -> Vec<usize> {
    let len = rng.gen_range(0..=max_len);
    (0..len).map(|_| rng.gen_range(0..letters)).collect()
}

pub fn counts<T: std::hash::Hash + Eq>(it: impl IntoIterator<Item = T>) -> HashMap<T, usize> {
    let mut m = HashMap::new();
    for x in it {
        *m.entry(x).or_insert(0) += 1;
    }
    m
}
