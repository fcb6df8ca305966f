//! Inclusion of the ω-language of a grammar in that of a Büchi automaton.
//!
//! The solver computes, for every nonterminal `X`, the boxes of the finite
//! words derivable from `X` (`Λ_X`), and for every pair `X, Y` the boxes of
//! the words `v` with `X ⇒* vY` along rightmost nonterminals (`Δ_{X,Y}`).
//! Inclusion holds iff every `τ ∈ Δ_{S,X}` and `ρ ∈ Δ_{X,X}` form a lasso.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::automata::{letter_map, Nba};
use crate::boxes::{is_lasso, letter_box, TransitionBox};
use crate::error::{Error, Result};
use crate::grammar::{Grammar, Symbol};

/// Boxes with one witness word each, as automaton letters.
pub type BoxSet = BTreeMap<TransitionBox, Vec<usize>>;

/// A variable of the inequality system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LvpVar {
    /// `Λ_X`
    Fin(usize),
    /// `Δ_{X,Y}`
    Inf(usize, usize),
}

/// `S ; R = { s;r }`, witnesses concatenated, first witness kept.
pub fn compose_sets(s: &BoxSet, r: &BoxSet) -> BoxSet {
    let mut out = BoxSet::new();
    for (a, u) in s {
        for (b, v) in r {
            out.entry(a.compose(b)).or_insert_with(|| {
                let mut w = u.clone();
                w.extend_from_slice(v);
                w
            });
        }
    }
    out
}

fn id_set() -> BoxSet {
    BoxSet::from([(TransitionBox::Id, Vec::new())])
}

/// Solution of the inequality system, possibly partial when the inclusion
/// check stopped early.
#[derive(Clone, Debug)]
pub struct LvpSystem {
    fin: Vec<BoxSet>,
    inf: Vec<Vec<BoxSet>>,
    letters: Vec<TransitionBox>,
    letter_of_terminal: Vec<usize>,
    /// Every insertion in order; replaying it reproduces each iterate.
    pub growth: Vec<(LvpVar, TransitionBox)>,
    /// Right-hand sides evaluated.
    pub evaluations: usize,
    /// Evaluations that added at least one box.
    pub growth_steps: usize,
}

impl LvpSystem {
    /// `Λ_X`
    pub fn sol(&self, x: usize) -> &BoxSet {
        &self.fin[x]
    }

    /// `Δ_{X,Y}`
    pub fn sol2(&self, x: usize, y: usize) -> &BoxSet {
        &self.inf[x][y]
    }

    pub fn letter_of_terminal(&self) -> &[usize] {
        &self.letter_of_terminal
    }

    /// Total number of boxes over all variables.
    pub fn box_count(&self) -> usize {
        self.fin.iter().map(|s| s.len()).sum::<usize>()
            + self.inf.iter().flatten().map(|s| s.len()).sum::<usize>()
    }

    /// `Λ_α` at the current solution: the left fold of the symbol sets.
    pub fn boxset_of_sentential(&self, alpha: &[Symbol]) -> BoxSet {
        let mut acc = id_set();
        for &s in alpha {
            let part = match s {
                Symbol::Terminal(t) => {
                    BoxSet::from([(self.letters[t].clone(), vec![self.letter_of_terminal[t]])])
                }
                Symbol::Nonterminal(x) => self.fin[x].clone(),
            };
            acc = compose_sets(&acc, &part);
        }
        acc
    }

    fn get(&self, v: LvpVar) -> &BoxSet {
        match v {
            LvpVar::Fin(x) => &self.fin[x],
            LvpVar::Inf(x, y) => &self.inf[x][y],
        }
    }

    fn get_mut(&mut self, v: LvpVar) -> &mut BoxSet {
        match v {
            LvpVar::Fin(x) => &mut self.fin[x],
            LvpVar::Inf(x, y) => &mut self.inf[x][y],
        }
    }
}

/// Upper bound on growth steps: every one of the `|N|(|N|+1)` variables can
/// grow at most once per box, and there are `3^{|Q|²}+1` boxes.
pub fn growth_bound(nonterminals: usize, states: usize) -> u128 {
    let boxes = 3u128
        .checked_pow((states * states) as u32)
        .map_or(u128::MAX, |b| b.saturating_add(1));
    let vars = (nonterminals * (nonterminals + 1)) as u128;
    vars.saturating_mul(boxes)
}

/// A pair of boxes that is not a lasso, with witnesses: `S ⇒* stem X` and
/// `X ⇒* loop X`, hence `stem·loop^ω` is generated but rejected.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub nonterminal: usize,
    pub tau: TransitionBox,
    pub rho: TransitionBox,
    pub stem: Vec<usize>,
    pub loop_word: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct LvpVerdict {
    pub included: bool,
    pub counterexample: Option<Counterexample>,
    pub system: LvpSystem,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub nonterminal: String,
    pub stem: Vec<String>,
    #[serde(rename = "loop")]
    pub loop_word: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LvpStats {
    pub iterations: usize,
    pub boxes: usize,
}

/// Machine-readable form of an [`LvpVerdict`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LvpReport {
    pub included: bool,
    pub counterexample: Option<CounterexampleReport>,
    pub stats: LvpStats,
}

impl LvpVerdict {
    pub fn report(&self, g: &Grammar, a: &Nba) -> LvpReport {
        let names = |w: &[usize]| w.iter().map(|&c| a.alphabet()[c].clone()).collect();
        LvpReport {
            included: self.included,
            counterexample: self.counterexample.as_ref().map(|c| CounterexampleReport {
                nonterminal: g.nonterminal_name(c.nonterminal).to_string(),
                stem: names(&c.stem),
                loop_word: names(&c.loop_word),
            }),
            stats: LvpStats {
                iterations: self.system.evaluations,
                boxes: self.system.box_count(),
            },
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum Ineq {
    /// `Λ_X ≥ Λ_α` for rule `X -> α`
    Fin { rule: usize },
    /// `Δ_{X,Y} ≥ Λ_α ; Δ_{Z,Y}` for rule `X -> α Z`
    Inf { rule: usize, y: usize },
}

struct Solver<'g> {
    g: &'g Grammar,
    sys: LvpSystem,
    ineqs: Vec<Ineq>,
    readers: BTreeMap<LvpVar, Vec<usize>>,
    q_init: usize,
    early: bool,
    bound: u128,
}

impl<'g> Solver<'g> {
    fn new(g: &'g Grammar, a: &Nba, early: bool) -> Result<Self> {
        g.ensure_valid()?;
        let letter_of_terminal = letter_map(g.terminals(), a.alphabet())?;
        let letters = letter_of_terminal
            .iter()
            .map(|&c| letter_box(a, c))
            .collect::<Result<Vec<_>>>()?;
        let n = g.nonterminals().len();
        let sys = LvpSystem {
            fin: vec![BoxSet::new(); n],
            inf: vec![vec![BoxSet::new(); n]; n],
            letters,
            letter_of_terminal,
            growth: Vec::new(),
            evaluations: 0,
            growth_steps: 0,
        };
        let mut ineqs = Vec::new();
        let mut readers: BTreeMap<LvpVar, Vec<usize>> = BTreeMap::new();
        for (i, rule) in g.rules().iter().enumerate() {
            let k = ineqs.len();
            ineqs.push(Ineq::Fin { rule: i });
            for x in rule.rhs.iter().filter_map(|s| s.as_nonterminal()) {
                readers.entry(LvpVar::Fin(x)).or_default().push(k);
            }
            if let Some((alpha, z)) = rule.split_rightmost() {
                for y in 0..n {
                    let k = ineqs.len();
                    ineqs.push(Ineq::Inf { rule: i, y });
                    for x in alpha.iter().filter_map(|s| s.as_nonterminal()) {
                        readers.entry(LvpVar::Fin(x)).or_default().push(k);
                    }
                    readers.entry(LvpVar::Inf(z, y)).or_default().push(k);
                }
            }
        }
        for list in readers.values_mut() {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Solver {
            g,
            sys,
            ineqs,
            readers,
            q_init: a.initial(),
            early,
            bound: growth_bound(n, a.num_states()),
        })
    }

    fn lhs(&self, k: usize) -> LvpVar {
        match self.ineqs[k] {
            Ineq::Fin { rule } => LvpVar::Fin(self.g.rule(rule).lhs),
            Ineq::Inf { rule, y } => LvpVar::Inf(self.g.rule(rule).lhs, y),
        }
    }

    fn rhs(&self, k: usize) -> BoxSet {
        match self.ineqs[k] {
            Ineq::Fin { rule } => self.sys.boxset_of_sentential(&self.g.rule(rule).rhs),
            Ineq::Inf { rule, y } => {
                let (alpha, z) = self.g.rule(rule).split_rightmost().expect("edge rule");
                let prefix = self.sys.boxset_of_sentential(alpha);
                compose_sets(&prefix, &self.sys.inf[z][y])
            }
        }
    }

    /// Looks for a non-lasso pair involving the freshly added `b` in `var`.
    fn observe(&self, var: LvpVar, b: &TransitionBox) -> Option<Counterexample> {
        let LvpVar::Inf(x, y) = var else {
            return None;
        };
        let s = self.g.start();
        let witness = |set: &BoxSet, b: &TransitionBox| set[b].clone();
        if x == s {
            // b is a new τ in Δ_{S,Y}
            let rhos = &self.sys.inf[y][y];
            for rho in rhos.keys() {
                if !is_lasso(b, rho, self.q_init) {
                    return Some(Counterexample {
                        nonterminal: y,
                        tau: b.clone(),
                        rho: rho.clone(),
                        stem: witness(&self.sys.inf[s][y], b),
                        loop_word: witness(rhos, rho),
                    });
                }
            }
        }
        if x == y {
            // b is a new ρ in Δ_{X,X}
            let taus = &self.sys.inf[s][x];
            for tau in taus.keys() {
                if !is_lasso(tau, b, self.q_init) {
                    return Some(Counterexample {
                        nonterminal: x,
                        tau: tau.clone(),
                        rho: b.clone(),
                        stem: witness(taus, tau),
                        loop_word: witness(&self.sys.inf[x][x], b),
                    });
                }
            }
        }
        None
    }

    /// Adds `set` into `var`; returns a counterexample when early termination
    /// is on and one appears.
    fn insert(
        &mut self,
        var: LvpVar,
        set: BoxSet,
        queue: &mut VecDeque<usize>,
        queued: &mut [bool],
    ) -> Result<Option<Counterexample>> {
        let mut grew = false;
        let mut found = None;
        for (b, w) in set {
            if self.sys.get(var).contains_key(&b) {
                continue;
            }
            grew = true;
            self.sys.get_mut(var).insert(b.clone(), w);
            self.sys.growth.push((var, b.clone()));
            if self.early && found.is_none() {
                found = self.observe(var, &b);
            }
        }
        if grew {
            self.sys.growth_steps += 1;
            if self.sys.growth_steps as u128 > self.bound {
                return Err(Error::Invariant(format!(
                    "box fixpoint grew {} times, above the lattice bound {}",
                    self.sys.growth_steps, self.bound
                )));
            }
            for &k in self.readers.get(&var).map(Vec::as_slice).unwrap_or(&[]) {
                if !queued[k] {
                    queued[k] = true;
                    queue.push_back(k);
                }
            }
        }
        Ok(found)
    }

    fn run(mut self) -> Result<(LvpSystem, Option<Counterexample>)> {
        let n = self.g.nonterminals().len();
        let mut queue: VecDeque<usize> = (0..self.ineqs.len()).collect();
        let mut queued = vec![true; self.ineqs.len()];
        for y in 0..n {
            if let Some(c) = self.insert(LvpVar::Inf(y, y), id_set(), &mut queue, &mut queued)? {
                return Ok((self.sys, Some(c)));
            }
        }
        while let Some(k) = queue.pop_front() {
            queued[k] = false;
            self.sys.evaluations += 1;
            let rhs = self.rhs(k);
            let lhs = self.lhs(k);
            if let Some(c) = self.insert(lhs, rhs, &mut queue, &mut queued)? {
                return Ok((self.sys, Some(c)));
            }
        }
        Ok((self.sys, None))
    }
}

/// Least solution of the inequality system for `(g, a)`.
pub fn solve_lvp_system(g: &Grammar, a: &Nba) -> Result<LvpSystem> {
    Ok(Solver::new(g, a, false)?.run()?.0)
}

/// Whether every infinite word generated by `g` is accepted by `a`. Stops as
/// soon as a non-lasso pair shows up.
pub fn check_inclusion(g: &Grammar, a: &Nba) -> Result<LvpVerdict> {
    let (system, counterexample) = Solver::new(g, a, true)?.run()?;
    Ok(LvpVerdict {
        included: counterexample.is_none(),
        counterexample,
        system,
    })
}

/// Decides inclusion from a complete solution, scanning all pairs.
pub fn decide(g: &Grammar, sys: &LvpSystem, q_init: usize) -> Option<Counterexample> {
    let s = g.start();
    for x in 0..g.nonterminals().len() {
        for (tau, u) in sys.sol2(s, x) {
            for (rho, v) in sys.sol2(x, x) {
                if !is_lasso(tau, rho, q_init) {
                    return Some(Counterexample {
                        nonterminal: x,
                        tau: tau.clone(),
                        rho: rho.clone(),
                        stem: u.clone(),
                        loop_word: v.clone(),
                    });
                }
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::UpWord;
    use crate::boxes::tests::{rho_ack, rho_req, rho_s};
    use crate::examples::{a_ex, g_ex};
    use crate::grammar::Rule;
    use std::collections::BTreeSet;

    fn keys(s: &BoxSet) -> BTreeSet<TransitionBox> {
        s.keys().cloned().collect()
    }

    #[test]
    fn running_example_least_solution() {
        let sys = solve_lvp_system(&g_ex(), &a_ex()).unwrap();
        let id = TransitionBox::Id;
        assert_eq!(keys(sys.sol(0)), BTreeSet::from([rho_ack()]));
        assert_eq!(keys(sys.sol(1)), BTreeSet::from([id.clone(), rho_s()]));
        assert_eq!(keys(sys.sol2(0, 0)), BTreeSet::from([id.clone(), rho_ack()]));
        assert_eq!(keys(sys.sol2(1, 1)), BTreeSet::from([id]));
        assert!(sys.sol2(0, 1).is_empty());
        assert!(sys.sol2(1, 0).is_empty());
        let t = Symbol::Terminal;
        let alpha = [t(0), Symbol::Nonterminal(1), t(1)];
        assert_eq!(keys(&sys.boxset_of_sentential(&alpha)), BTreeSet::from([rho_ack()]));
        assert_eq!(keys(&sys.boxset_of_sentential(&[])), BTreeSet::from([TransitionBox::Id]));
        assert_eq!(keys(&sys.boxset_of_sentential(&[t(0)])), BTreeSet::from([rho_req()]));
        assert!(decide(&g_ex(), &sys, 0).is_none());
    }

    #[test]
    fn running_example_is_included() {
        let v = check_inclusion(&g_ex(), &a_ex()).unwrap();
        assert!(v.included);
        assert!(v.counterexample.is_none());
    }

    fn req_only() -> Grammar {
        Grammar::new(
            vec!["S".into()],
            vec!["req".into()],
            vec![Rule::new(0, vec![Symbol::Terminal(0), Symbol::Nonterminal(0)])],
            0,
            None,
        )
    }

    #[test]
    fn unanswered_requests_are_a_counterexample() {
        let a = a_ex();
        let v = check_inclusion(&req_only(), &a).unwrap();
        assert!(!v.included);
        let c = v.counterexample.clone().unwrap();
        assert!(!c.loop_word.is_empty());
        assert!(c.stem.iter().chain(&c.loop_word).all(|&l| l == 0));
        let w = UpWord::new(c.stem.clone(), c.loop_word.clone()).unwrap();
        assert!(!a.accepts_up(&w).unwrap());
        let r = v.report(&req_only(), &a);
        assert_eq!(r.counterexample.unwrap().nonterminal, "S");
    }

    #[test]
    fn unproductive_nonterminal_has_no_boxes() {
        let g = Grammar::new(
            vec!["Z".into()],
            vec!["req".into()],
            vec![Rule::new(0, vec![Symbol::Nonterminal(0)])],
            0,
            None,
        );
        let sys = solve_lvp_system(&g, &a_ex()).unwrap();
        assert!(sys.sol(0).is_empty());
        // Δ_{Z,Z} = {id}: only trivial pairs, so inclusion holds vacuously
        assert_eq!(keys(sys.sol2(0, 0)), BTreeSet::from([TransitionBox::Id]));
        assert!(check_inclusion(&g, &a_ex()).unwrap().included);
    }

    #[test]
    fn unknown_terminal_is_reported() {
        let g = Grammar::new(
            vec!["S".into()],
            vec!["zzz".into()],
            vec![Rule::new(0, vec![Symbol::Terminal(0)])],
            0,
            None,
        );
        assert!(matches!(check_inclusion(&g, &a_ex()), Err(Error::AlphabetMismatch(_))));
    }

    #[test]
    fn growth_bound_saturates() {
        assert_eq!(growth_bound(1, 1), 2 * 4);
        assert_eq!(growth_bound(2, 20), u128::MAX);
    }
}
