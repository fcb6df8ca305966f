//! Formula summaries of a game grammar against a parity automaton, and the
//! parity game they induce.
//!
//! `sol(qX)` describes, in CNF over atoms `(p, i)`, which effects prover can
//! force when `X` is fully derived from DPA state `q`: the emitted word leads
//! to `p` with highest priority `i`. The system is solved by Kleene rounds
//! from `FALSE`; the whole iterate history is kept because refuter strategies
//! read earlier rounds.

use std::collections::{HashMap, VecDeque};

use crate::automata::{letter_map, Dpa};
use crate::error::{Error, Result};
use crate::formulas::{Atom, ExtAtom, ExtFormula, Formula};
use crate::grammar::{Grammar, Owner, Symbol};
use crate::paritygame::ParityGame;

/// Which Kleene iterate nonterminals are read from.
#[derive(Clone, Copy, Debug)]
pub enum Level<'a> {
    /// The fixpoint.
    Final,
    /// `sol^ℓ` for every symbol.
    At(usize),
    /// One level per symbol position (entries at terminals are ignored).
    PerSymbol(&'a [usize]),
}

#[derive(Clone, Copy, Debug)]
pub struct LspOptions {
    /// Most Kleene rounds before giving up.
    pub max_rounds: usize,
}

impl Default for LspOptions {
    fn default() -> Self {
        LspOptions { max_rounds: 100_000 }
    }
}

/// Solved equation system with its iterate history.
#[derive(Clone, Debug)]
pub struct LspSystem {
    grammar: Grammar,
    dpa: Dpa,
    letter_of_terminal: Vec<usize>,
    /// `terminal_formula[t][q]` is the formula `qa` of terminal `t`.
    terminal_formula: Vec<Vec<Formula>>,
    /// Per variable `q * |N| + X`: `(round, value)` for every round the value
    /// changed, starting with `(0, FALSE)`.
    history: Vec<Vec<(usize, Formula)>>,
    last_round: usize,
}

/// `qa` for a letter `a`: the atom `(δ(q,a), max(Ω(q), Ω(δ(q,a))))`.
pub fn formula_of_letter(d: &Dpa, q: usize, letter: usize) -> Formula {
    let p = d.next(q, letter);
    Formula::atom(Atom::new(p, d.priority(q).max(d.priority(p))))
}

/// `qε = (q, 0)`.
pub fn formula_of_epsilon(q: usize) -> Formula {
    Formula::atom(Atom::new(q, 0))
}

/// Largest number of rounds the fixpoint can take: `|N| · |Q| · 2^k` with `k`
/// the number of atoms.
pub fn round_bound(nonterminals: usize, states: usize, max_prio: u32) -> u128 {
    let atoms = states as u128 * (max_prio as u128 + 1);
    let chains = if atoms >= 127 { u128::MAX } else { 1u128 << atoms };
    (nonterminals as u128 * states as u128).saturating_mul(chains)
}

/// Longest strictly ascending chain of formulas over `k` atoms is `2^k`.
pub fn chain_bound(states: usize, max_prio: u32) -> u128 {
    let atoms = states as u128 * (max_prio as u128 + 1);
    if atoms >= 127 {
        u128::MAX
    } else {
        1u128 << atoms
    }
}

impl LspSystem {
    pub fn grammar(&self) -> &Grammar {
        &self.grammar
    }

    pub fn dpa(&self) -> &Dpa {
        &self.dpa
    }

    pub fn letter_of_terminal(&self) -> &[usize] {
        &self.letter_of_terminal
    }

    /// Index of the round whose iterate is the fixpoint.
    pub fn final_round(&self) -> usize {
        self.last_round
    }

    fn var(&self, q: usize, x: usize) -> usize {
        q * self.grammar.nonterminals().len() + x
    }

    /// `sol(qX)` at the fixpoint.
    pub fn sol(&self, q: usize, x: usize) -> &Formula {
        &self.history[self.var(q, x)].last().expect("history starts at FALSE").1
    }

    /// `sol^ℓ(qX)`, the value after round `ℓ`.
    pub fn sol_at(&self, q: usize, x: usize, round: usize) -> &Formula {
        let h = &self.history[self.var(q, x)];
        let i = h.partition_point(|(r, _)| *r <= round);
        &h[i - 1].1
    }

    /// Rounds at which `sol(qX)` changed, with the new values.
    pub fn history(&self, q: usize, x: usize) -> &[(usize, Formula)] {
        &self.history[self.var(q, x)]
    }

    /// Formula of one terminal at `q`.
    pub fn formula_of_terminal(&self, q: usize, t: usize) -> &Formula {
        &self.terminal_formula[t][q]
    }

    /// Formula of a sentential form at `q`, nonterminals read at `level`.
    pub fn formula_of_sentential(&self, q: usize, alpha: &[Symbol], level: Level<'_>) -> Formula {
        let lookup = |pos: usize, p: usize, x: usize| -> &Formula {
            match level {
                Level::Final => self.sol(p, x),
                Level::At(l) => self.sol_at(p, x, l),
                Level::PerSymbol(ls) => self.sol_at(p, x, ls[pos]),
            }
        };
        fold_sentential(q, alpha, &self.terminal_formula, lookup)
    }

    /// The combined right-hand side of `qX` with nonterminals at `level`.
    pub fn rhs(&self, q: usize, x: usize, level: Level<'_>) -> Formula {
        let owner = self.grammar.owner(x).expect("game grammar");
        combine(
            owner,
            self.grammar
                .rules_of(x)
                .iter()
                .map(|&r| self.formula_of_sentential(q, &self.grammar.rule(r).rhs, level)),
        )
    }
}

fn fold_sentential<'s>(
    q: usize,
    alpha: &[Symbol],
    terminal_formula: &'s [Vec<Formula>],
    lookup: impl Fn(usize, usize, usize) -> &'s Formula,
) -> Formula {
    let symbol = |pos: usize, p: usize| -> &'s Formula {
        match alpha[pos] {
            Symbol::Terminal(t) => &terminal_formula[t][p],
            Symbol::Nonterminal(x) => lookup(pos, p, x),
        }
    };
    if alpha.is_empty() {
        return formula_of_epsilon(q);
    }
    let mut acc = symbol(0, q).clone();
    for pos in 1..alpha.len() {
        if acc.is_false() {
            break;
        }
        acc = acc.compose_family(|p| symbol(pos, p));
    }
    acc
}

fn combine<A: Ord + Clone>(
    owner: Owner,
    parts: impl Iterator<Item = crate::formulas::Cnf<A>>,
) -> crate::formulas::Cnf<A> {
    match owner {
        Owner::Prover => parts.fold(crate::formulas::Cnf::tt(), |acc, f| acc.conj(&f)),
        Owner::Refuter => parts.fold(crate::formulas::Cnf::ff(), |acc, f| acc.disj(&f)),
    }
}

pub fn solve_lsp_system(g: &Grammar, d: &Dpa) -> Result<LspSystem> {
    solve_lsp_system_with(g, d, LspOptions::default())
}

/// Least fixpoint by Kleene rounds: round `r+1` evaluates every right-hand
/// side on the round-`r` values.
pub fn solve_lsp_system_with(g: &Grammar, d: &Dpa, opts: LspOptions) -> Result<LspSystem> {
    g.ensure_valid()?;
    g.ensure_game()?;
    let letter_of_terminal = letter_map(g.terminals(), d.alphabet())?;
    let m = d.num_states();
    let n = g.nonterminals().len();
    let terminal_formula: Vec<Vec<Formula>> = letter_of_terminal
        .iter()
        .map(|&c| (0..m).map(|q| formula_of_letter(d, q, c)).collect())
        .collect();
    let mut cur: Vec<Formula> = vec![Formula::ff(); m * n];
    let mut history: Vec<Vec<(usize, Formula)>> = vec![vec![(0, Formula::ff())]; m * n];
    let rounds_allowed = round_bound(n, m, d.max_priority());
    let chains_allowed = chain_bound(m, d.max_priority());
    let mut round = 0;
    loop {
        let mut next = Vec::with_capacity(m * n);
        for q in 0..m {
            for x in 0..n {
                let owner = g.owner(x).expect("checked game grammar");
                let lookup = |_: usize, p: usize, y: usize| &cur[p * n + y];
                let f = combine(
                    owner,
                    g.rules_of(x)
                        .iter()
                        .map(|&r| fold_sentential(q, &g.rule(r).rhs, &terminal_formula, lookup)),
                );
                next.push(f);
            }
        }
        let mut changed = false;
        for (v, f) in next.iter().enumerate() {
            if *f != cur[v] {
                debug_assert!(cur[v].implies(f), "Kleene iterates must ascend");
                history[v].push((round + 1, f.clone()));
                changed = true;
                if history[v].len() as u128 > chains_allowed {
                    return Err(Error::Invariant(format!(
                        "ascending chain of length {} exceeds 2^k",
                        history[v].len()
                    )));
                }
            }
        }
        if !changed {
            break;
        }
        round += 1;
        cur = next;
        if round as u128 > rounds_allowed {
            return Err(Error::Invariant(format!(
                "{round} Kleene rounds exceed the bound {rounds_allowed}"
            )));
        }
        if round > opts.max_rounds {
            return Err(Error::ResourceLimit {
                what: "Kleene rounds",
                limit: opts.max_rounds,
            });
        }
    }
    Ok(LspSystem {
        grammar: g.clone(),
        dpa: d.clone(),
        letter_of_terminal,
        terminal_formula,
        history,
        last_round: round,
    })
}

/// `esol(qX)` for every `q` and `X`, indexed `q * |N| + X`.
#[derive(Clone, Debug)]
pub struct ExtendedSolution {
    esol: Vec<ExtFormula>,
    nonterminals: usize,
}

impl ExtendedSolution {
    pub fn get(&self, q: usize, x: usize) -> &ExtFormula {
        &self.esol[q * self.nonterminals + x]
    }

    /// Replaces one entry; for representative-independence tests.
    pub fn set(&mut self, q: usize, x: usize, f: ExtFormula) {
        self.esol[q * self.nonterminals + x] = f;
    }

    pub fn nonterminals(&self) -> usize {
        self.nonterminals
    }

    pub fn states(&self) -> usize {
        self.esol.len() / self.nonterminals.max(1)
    }
}

/// `esol(qX)`: over the rules `X -> ηY`, the formulas `sol(qη).Y`, conjoined
/// for prover and disjoined for refuter. `FALSE` without such rules.
pub fn extended_formula(sys: &LspSystem, q: usize, x: usize) -> ExtFormula {
    let g = &sys.grammar;
    let owner = g.owner(x).expect("game grammar");
    let parts: Vec<ExtFormula> = g
        .rules_of(x)
        .iter()
        .filter_map(|&r| g.rule(r).split_rightmost())
        .map(|(eta, y)| {
            sys.formula_of_sentential(q, eta, Level::Final)
                .attach_nonterminal(y)
        })
        .collect();
    if parts.is_empty() {
        return ExtFormula::ff();
    }
    combine(owner, parts.into_iter())
}

pub fn extend_solution(sys: &LspSystem) -> ExtendedSolution {
    let n = sys.grammar.nonterminals().len();
    let m = sys.dpa.num_states();
    let mut esol = Vec::with_capacity(m * n);
    for q in 0..m {
        for x in 0..n {
            esol.push(extended_formula(sys, q, x));
        }
    }
    ExtendedSolution {
        esol,
        nonterminals: n,
    }
}

/// A vertex of the induced parity game.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GameVertex {
    /// `qX`, owned by prover, who picks a clause.
    Formula { q: usize, x: usize },
    /// `qXK` for the `k`-th clause of `esol(qX)`, owned by refuter, who picks an atom.
    Clause { q: usize, x: usize, k: usize },
    /// `(qXK, i, pY)`, carrying priority `i`, leading to `pY`.
    Helper {
        q: usize,
        x: usize,
        k: usize,
        atom: ExtAtom,
    },
}

impl GameVertex {
    pub fn describe(&self, g: &Grammar, d: &Dpa) -> String {
        let st = |q: usize| d.state_names()[q].as_str();
        let nt = |x: usize| g.nonterminal_name(x);
        match *self {
            GameVertex::Formula { q, x } => format!("{}{}", st(q), nt(x)),
            GameVertex::Clause { q, x, k } => format!("{}{}K{}", st(q), nt(x), k),
            GameVertex::Helper { q, x, k, atom } => format!(
                "({}{}K{},{},{}{})",
                st(q),
                nt(x),
                k,
                atom.prio,
                st(atom.state as usize),
                nt(atom.nt as usize)
            ),
        }
    }
}

/// The parity game restricted to the part reachable from `q_init S`.
#[derive(Clone, Debug)]
pub struct LspGame {
    pub game: ParityGame,
    pub vertices: Vec<GameVertex>,
    pub index: HashMap<GameVertex, usize>,
    pub initial: usize,
}

impl LspGame {
    pub fn vertex_id(&self, v: &GameVertex) -> Option<usize> {
        self.index.get(v).copied()
    }
}

/// Builds the reachable part of the parity game from `(q_init, start)`.
pub fn build_parity_game(
    es: &ExtendedSolution,
    q_init: usize,
    start: usize,
) -> Result<LspGame> {
    let mut vertices: Vec<GameVertex> = Vec::new();
    let mut index: HashMap<GameVertex, usize> = HashMap::new();
    let mut owners = Vec::new();
    let mut prios = Vec::new();
    let mut succ: Vec<Vec<usize>> = Vec::new();
    let mut queue = VecDeque::new();

    let mut intern = |v: GameVertex,
                      vertices: &mut Vec<GameVertex>,
                      owners: &mut Vec<Owner>,
                      prios: &mut Vec<u32>,
                      succ: &mut Vec<Vec<usize>>,
                      queue: &mut VecDeque<usize>|
     -> usize {
        if let Some(&id) = index.get(&v) {
            return id;
        }
        let id = vertices.len();
        let (owner, prio) = match &v {
            GameVertex::Formula { .. } => (Owner::Prover, 0),
            GameVertex::Clause { .. } => (Owner::Refuter, 0),
            GameVertex::Helper { atom, .. } => (Owner::Refuter, atom.prio),
        };
        index.insert(v.clone(), id);
        vertices.push(v);
        owners.push(owner);
        prios.push(prio);
        succ.push(Vec::new());
        queue.push_back(id);
        id
    };

    let initial = intern(
        GameVertex::Formula { q: q_init, x: start },
        &mut vertices,
        &mut owners,
        &mut prios,
        &mut succ,
        &mut queue,
    );
    while let Some(id) = queue.pop_front() {
        let targets: Vec<GameVertex> = match vertices[id].clone() {
            GameVertex::Formula { q, x } => {
                let f = es.get(q, x);
                if f.is_true() {
                    return Err(Error::Invariant(format!(
                        "extended solution of state {q}, nonterminal {x} is TRUE"
                    )));
                }
                (0..f.clauses().len())
                    .map(|k| GameVertex::Clause { q, x, k })
                    .collect()
            }
            GameVertex::Clause { q, x, k } => {
                let clause = &es.get(q, x).clauses()[k];
                if clause.is_empty() {
                    vec![vertices[id].clone()]
                } else {
                    clause
                        .iter()
                        .map(|&atom| GameVertex::Helper { q, x, k, atom })
                        .collect()
                }
            }
            GameVertex::Helper { atom, .. } => vec![GameVertex::Formula {
                q: atom.state as usize,
                x: atom.nt as usize,
            }],
        };
        for t in targets {
            let tid = intern(
                t,
                &mut vertices,
                &mut owners,
                &mut prios,
                &mut succ,
                &mut queue,
            );
            succ[id].push(tid);
        }
    }
    let game = ParityGame::new(owners, prios, succ)?;
    Ok(LspGame {
        game,
        vertices,
        index,
        initial,
    })
}
