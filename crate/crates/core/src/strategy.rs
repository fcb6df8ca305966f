//! Executable strategies for the grammar game, read off the parity game.
//!
//! A play is cut into segments. Each starts at an anchor `wX` (the only
//! nonterminal is the last symbol), where a rule `X -> ηY` is played, and
//! ends once `η` is fully derived, at the next anchor `ww'Y`.
//!
//! Prover follows one clause of the current formula through the segment,
//! shrinking it after every move. Refuter follows a set of chosen atoms (the
//! image of a choice function) and reads nonterminals at decreasing Kleene
//! levels, which forces every refuter segment to end.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::automata::{Dpa, Nba};
use crate::determinize::{determinize_with, DeterminizeOptions};
use crate::error::{Error, Result};
use crate::formulas::{Atom, ExtAtom, Formula};
use crate::grammar::{Grammar, Owner, SententialForm, Symbol};
use crate::lsp::{
    build_parity_game, extend_solution, formula_of_epsilon, solve_lsp_system_with, ExtendedSolution, GameVertex,
    Level, LspGame, LspOptions, LspSystem,
};
use crate::paritygame::{solve, Solution};

/// `v ≺ w`: `w = x·i·z` and `v = x·y·z` with `i > 0` and every entry of `y`
/// below `i`.
pub fn level_less(v: &[usize], w: &[usize]) -> bool {
    (0..w.len()).any(|k| {
        let i = w[k];
        if i == 0 {
            return false;
        }
        let (x, z) = (&w[..k], &w[k + 1..]);
        if v.len() < x.len() + z.len() || !v.starts_with(x) || !v.ends_with(z) {
            return false;
        }
        v[x.len()..v.len() - z.len()].iter().all(|&e| e < i)
    })
}

/// Strategy tables of the winner at the initial position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StrategyTable {
    /// Clause chosen in `esol(qX)` for every winning `(q, X)`.
    Prover(BTreeMap<(usize, usize), usize>),
    /// For every winning `(q, X)`, the atom chosen in each clause of `esol(qX)`.
    Refuter(BTreeMap<(usize, usize), Vec<ExtAtom>>),
}

#[derive(Clone, Debug, Default)]
pub struct SynthesisOptions {
    pub determinize: DeterminizeOptions,
    pub lsp: LspOptions,
}

/// Everything the pipeline computes, ending in the winner's strategy.
#[derive(Clone, Debug)]
pub struct Synthesis {
    pub system: LspSystem,
    pub esol: ExtendedSolution,
    pub game: LspGame,
    pub solution: Solution,
    pub winner: Owner,
    pub table: StrategyTable,
}

impl Synthesis {
    pub fn dpa(&self) -> &Dpa {
        self.system.dpa()
    }

    pub fn grammar(&self) -> &Grammar {
        self.system.grammar()
    }
}

pub fn synthesize(g: &Grammar, a: &Nba) -> Result<Synthesis> {
    synthesize_with(g, a, &SynthesisOptions::default())
}

/// Determinizes, then runs [`synthesize_dpa`].
pub fn synthesize_with(g: &Grammar, a: &Nba, opts: &SynthesisOptions) -> Result<Synthesis> {
    g.ensure_valid()?;
    g.ensure_game()?;
    crate::automata::letter_map(g.terminals(), a.alphabet())?;
    let determinized = determinize_with(a, opts.determinize)?;
    synthesize_dpa(g, &determinized.dpa, opts.lsp)
}

/// Solves the formula system, builds and solves the parity game, and reads
/// off the winner's strategy table.
pub fn synthesize_dpa(g: &Grammar, d: &Dpa, lsp: LspOptions) -> Result<Synthesis> {
    let system = solve_lsp_system_with(g, d, lsp)?;
    let esol = extend_solution(&system);
    synthesize_from_esol(system, esol)
}

/// The pipeline from a given extended solution; the game is built from the
/// clauses exactly as stored.
pub fn synthesize_from_esol(system: LspSystem, esol: ExtendedSolution) -> Result<Synthesis> {
    let g = system.grammar();
    let game = build_parity_game(&esol, system.dpa().initial(), g.start())?;
    let solution = solve(&game.game);
    let winner = solution.winner[game.initial];
    let table = match winner {
        Owner::Prover => {
            let mut t = BTreeMap::new();
            for (id, v) in game.vertices.iter().enumerate() {
                if let GameVertex::Formula { q, x } = *v {
                    if solution.winner[id] != Owner::Prover {
                        continue;
                    }
                    let target = solution.strategy[id].ok_or_else(|| {
                        Error::Invariant(format!("no prover move at vertex {id}"))
                    })?;
                    match game.vertices[target] {
                        GameVertex::Clause { k, .. } => {
                            t.insert((q, x), k);
                        }
                        _ => return Err(Error::Invariant("prover move is not a clause".into())),
                    }
                }
            }
            StrategyTable::Prover(t)
        }
        Owner::Refuter => {
            let mut t = BTreeMap::new();
            for (id, v) in game.vertices.iter().enumerate() {
                if let GameVertex::Formula { q, x } = *v {
                    if solution.winner[id] != Owner::Refuter {
                        continue;
                    }
                    let mut chosen = Vec::new();
                    for &c in game.game.successors(id) {
                        let target = solution.strategy[c].ok_or_else(|| {
                            Error::Invariant(format!("no refuter move at clause vertex {c}"))
                        })?;
                        match game.vertices[target] {
                            GameVertex::Helper { atom, .. } => chosen.push(atom),
                            _ => {
                                return Err(Error::Invariant(
                                    "refuter move is not a helper vertex".into(),
                                ))
                            }
                        }
                    }
                    t.insert((q, x), chosen);
                }
            }
            StrategyTable::Refuter(t)
        }
    };
    Ok(Synthesis {
        system,
        esol,
        game,
        solution,
        winner,
        table,
    })
}

/// Picks the opponent's moves during a simulation.
pub trait Adversary {
    /// Index into `rules`, the legal rule indices for `nonterminal`.
    fn choose(&mut self, nonterminal: usize, rules: &[usize]) -> usize;
}

/// Always the first legal rule.
pub struct FirstRule;

impl Adversary for FirstRule {
    fn choose(&mut self, _: usize, _: &[usize]) -> usize {
        0
    }
}

/// Uniformly random legal rules from a seeded generator.
pub struct SeededRandom(pub ChaCha8Rng);

impl SeededRandom {
    pub fn new(seed: u64) -> Self {
        use rand::SeedableRng;
        SeededRandom(ChaCha8Rng::seed_from_u64(seed))
    }
}

impl Adversary for SeededRandom {
    fn choose(&mut self, _: usize, rules: &[usize]) -> usize {
        self.0.gen_range(0..rules.len())
    }
}

/// Plays the listed rule indices where legal; falls back to the first legal
/// rule otherwise or once the script runs out.
pub struct Scripted {
    moves: std::collections::VecDeque<usize>,
}

impl Scripted {
    pub fn new(moves: impl IntoIterator<Item = usize>) -> Self {
        Scripted {
            moves: moves.into_iter().collect(),
        }
    }
}

impl Adversary for Scripted {
    fn choose(&mut self, _: usize, rules: &[usize]) -> usize {
        self.moves
            .pop_front()
            .and_then(|r| rules.iter().position(|&x| x == r))
            .unwrap_or(0)
    }
}

/// Prover's bookkeeping inside a segment: the current form `η` derived from
/// the anchor state `q`, and a clause of its formula.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProverSegment {
    pub q: usize,
    pub form: SententialForm,
    pub clause: Vec<Atom>,
}

/// Refuter's bookkeeping inside a segment: per-symbol Kleene levels and the
/// image of a choice function on the formula at those levels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RefuterSegment {
    pub q: usize,
    pub form: SententialForm,
    pub levels: Vec<usize>,
    pub image: BTreeSet<Atom>,
}

fn subclause_within(f: &Formula, clause: &[Atom]) -> Option<Vec<Atom>> {
    f.clauses()
        .iter()
        .find(|h| h.iter().all(|a| clause.binary_search(a).is_ok()))
        .cloned()
}

fn refine_image(f: &Formula, image: &BTreeSet<Atom>) -> Option<BTreeSet<Atom>> {
    f.clauses()
        .iter()
        .map(|c| c.iter().find(|a| image.contains(a)).copied())
        .collect()
}

fn leftmost(form: &SententialForm) -> Result<(usize, usize)> {
    form.leftmost_nonterminal()
        .ok_or_else(|| Error::Invariant("segment step on a terminal form".into()))
}

/// Prover's move at the leftmost (prover-owned) nonterminal: the first rule
/// whose successor formula has a clause inside the tracked one.
pub fn prover_choose(sys: &LspSystem, st: &ProverSegment) -> Result<(usize, ProverSegment)> {
    let (pos, x) = leftmost(&st.form)?;
    for &r in sys.grammar().rules_of(x) {
        if let Ok(next) = prover_refine(sys, st, pos, r) {
            return Ok((r, next));
        }
    }
    Err(Error::Invariant(format!(
        "no prover rule refines the clause at {}",
        sys.grammar().nonterminal_name(x)
    )))
}

/// Prover's clause after rule `r` was applied at `pos`.
pub fn prover_refine(
    sys: &LspSystem,
    st: &ProverSegment,
    pos: usize,
    r: usize,
) -> Result<ProverSegment> {
    let form = st.form.replace(pos, &sys.grammar().rule(r).rhs);
    let f = sys.formula_of_sentential(st.q, form.symbols(), Level::Final);
    let clause = subclause_within(&f, &st.clause).ok_or_else(|| {
        Error::Invariant(format!("rule {} leaves no sub-clause", sys.grammar().render_rule(r)))
    })?;
    Ok(ProverSegment {
        q: st.q,
        form,
        clause,
    })
}

fn next_levels(levels: &[usize], pos: usize, len: usize) -> Result<Vec<usize>> {
    let l = levels[pos];
    if l == 0 {
        return Err(Error::Invariant(
            "refuter reached a nonterminal at level 0".into(),
        ));
    }
    let mut out = Vec::with_capacity(levels.len() + len);
    out.extend_from_slice(&levels[..pos]);
    out.extend(std::iter::repeat_n(l - 1, len));
    out.extend_from_slice(&levels[pos + 1..]);
    Ok(out)
}

/// Refuter's move at the leftmost (refuter-owned) nonterminal: the first rule
/// admitting a choice function within the current image.
pub fn refuter_choose(sys: &LspSystem, st: &RefuterSegment) -> Result<(usize, RefuterSegment)> {
    let (pos, x) = leftmost(&st.form)?;
    for &r in sys.grammar().rules_of(x) {
        if let Ok(next) = refuter_refine(sys, st, pos, r) {
            return Ok((r, next));
        }
    }
    Err(Error::Invariant(format!(
        "no refuter rule refines the choice at {}",
        sys.grammar().nonterminal_name(x)
    )))
}

/// Refuter's levels and image after rule `r` was applied at `pos`.
pub fn refuter_refine(
    sys: &LspSystem,
    st: &RefuterSegment,
    pos: usize,
    r: usize,
) -> Result<RefuterSegment> {
    let rhs = &sys.grammar().rule(r).rhs;
    let levels = next_levels(&st.levels, pos, rhs.len())?;
    let form = st.form.replace(pos, rhs);
    let f = sys.formula_of_sentential(st.q, form.symbols(), Level::PerSymbol(&levels));
    let image = refine_image(&f, &st.image).ok_or_else(|| {
        Error::Invariant(format!(
            "rule {} admits no refining choice",
            sys.grammar().render_rule(r)
        ))
    })?;
    Ok(RefuterSegment {
        q: st.q,
        form,
        levels,
        image,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    /// The requested number of segments was played.
    Completed,
    /// An anchor without rules ending in a nonterminal: the play is finite,
    /// which prover wins.
    Deadlock,
    /// A prover segment exceeded the step budget: no further anchor is
    /// reached, which prover wins.
    ProverInfiniteSegment,
    /// A refuter segment exceeded the step budget, which the construction
    /// rules out.
    RefuterSegmentOverrun,
}

/// One segment of a simulated play.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub anchor_state: usize,
    pub anchor: usize,
    pub rules: Vec<usize>,
    /// Terminal indices of the grammar.
    pub emitted: Vec<usize>,
    pub state: usize,
    pub priority: u32,
    pub target: usize,
    /// Prover's clause after every step (prover strategies only).
    #[serde(skip)]
    pub clause_chain: Vec<Vec<Atom>>,
    /// Refuter's levels after every step (refuter strategies only).
    #[serde(skip)]
    pub level_chain: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayTrace {
    pub winner: Owner,
    pub segments: Vec<SegmentRecord>,
    pub outcome: Outcome,
    /// Highest segment priority among the last `window` segments.
    pub window_max: Option<u32>,
    pub window: usize,
    /// Winner read from the parity of `window_max`; prover for finite or
    /// unanchored plays.
    pub window_winner: Owner,
    pub refuter_segments_terminated: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct SimulationOptions {
    pub max_segments: usize,
    /// Derivation steps allowed inside one segment.
    pub step_budget: usize,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        SimulationOptions {
            max_segments: 100,
            step_budget: 10_000,
        }
    }
}

enum SegmentEnd {
    Done(SegmentRecord),
    Deadlock,
    Budget,
}

struct Frame {
    sym: Symbol,
    level: usize,
    /// Per state `p`: the formula of the suffix starting at this frame, from `p`.
    memo: Vec<Option<Formula>>,
}

/// A sentential form `w·β` derived from state `q`, held as the formula of
/// `w` and a stack of the symbols of `β` with the leftmost on top. Suffix
/// formulas are cached per frame, so replacing the leftmost nonterminal only
/// costs the new symbols. Gives the same formulas as `formula_of_sentential`.
struct Cursor<'s> {
    sys: &'s LspSystem,
    use_levels: bool,
    prefix: Formula,
    emitted: Vec<usize>,
    emitted_levels: Vec<usize>,
    stack: Vec<Frame>,
}

impl<'s> Cursor<'s> {
    fn new(sys: &'s LspSystem, q: usize, symbols: &[Symbol], level: usize, use_levels: bool) -> Self {
        let n = sys.dpa().num_states();
        let stack = symbols
            .iter()
            .rev()
            .map(|&sym| Frame {
                sym,
                level,
                memo: vec![None; n],
            })
            .collect();
        let mut c = Cursor {
            sys,
            use_levels,
            prefix: formula_of_epsilon(q),
            emitted: Vec::new(),
            emitted_levels: Vec::new(),
            stack,
        };
        c.normalize();
        c
    }

    fn symbol_formula(&self, p: usize, sym: Symbol, level: usize) -> &'s Formula {
        match sym {
            Symbol::Terminal(t) => self.sys.formula_of_terminal(p, t),
            Symbol::Nonterminal(x) if self.use_levels => self.sys.sol_at(p, x, level),
            Symbol::Nonterminal(x) => self.sys.sol(p, x),
        }
    }

    fn normalize(&mut self) {
        while let Some(&Frame {
            sym: Symbol::Terminal(t),
            level,
            ..
        }) = self.stack.last()
        {
            let sys = self.sys;
            self.prefix = self.prefix.compose_family(|r| sys.formula_of_terminal(r, t));
            self.emitted.push(t);
            self.emitted_levels.push(level);
            self.stack.pop();
        }
    }

    /// Fills the suffix cache of frame `i` for `states`, walking down only as
    /// far as entries are missing.
    fn ensure(&mut self, i: usize, states: Vec<usize>) {
        let mut pending: Vec<(usize, Vec<usize>)> = Vec::new();
        let mut cur = states;
        let mut j = i;
        loop {
            cur.sort_unstable();
            cur.dedup();
            cur.retain(|&p| self.stack[j].memo[p].is_none());
            if cur.is_empty() {
                break;
            }
            let Frame { sym, level, .. } = self.stack[j];
            let below: Vec<usize> = cur
                .iter()
                .flat_map(|&p| self.symbol_formula(p, sym, level).atoms())
                .map(|a| a.state as usize)
                .collect();
            pending.push((j, cur));
            if j == 0 {
                break;
            }
            j -= 1;
            cur = below;
        }
        for (j, ps) in pending.into_iter().rev() {
            let Frame { sym, level, .. } = self.stack[j];
            for p in ps {
                let f = self.symbol_formula(p, sym, level);
                let v = if j == 0 {
                    f.clone()
                } else {
                    let below = &self.stack[j - 1].memo;
                    f.compose_family(|r| below[r].as_ref().expect("filled below"))
                };
                self.stack[j].memo[p] = Some(v);
            }
        }
    }

    fn compose_rest(&mut self, f: &Formula, top: Option<usize>) -> Formula {
        match top {
            None => f.clone(),
            Some(i) => {
                self.ensure(i, f.atoms().iter().map(|a| a.state as usize).collect());
                let memo = &self.stack[i].memo;
                f.compose_family(|r| memo[r].as_ref().expect("ensured"))
            }
        }
    }

    fn top(&self) -> Option<(usize, usize)> {
        self.stack
            .last()
            .map(|f| (f.sym.as_nonterminal().expect("normalized"), f.level))
    }

    /// Formula after replacing the top nonterminal with `rhs` at `level`.
    fn successor_formula(&mut self, rhs: &[Symbol], level: usize) -> Formula {
        let mut f = self.prefix.clone();
        for &s in rhs {
            f = f.compose_family(|r| self.symbol_formula(r, s, level));
        }
        let below = self.stack.len().checked_sub(2);
        self.compose_rest(&f, below)
    }

    fn apply(&mut self, rhs: &[Symbol], level: usize) {
        let n = self.sys.dpa().num_states();
        self.stack.pop();
        self.stack.extend(rhs.iter().rev().map(|&sym| Frame {
            sym,
            level,
            memo: vec![None; n],
        }));
        self.normalize();
    }

    fn levels(&self) -> Vec<usize> {
        let mut out = self.emitted_levels.clone();
        out.extend(self.stack.iter().rev().map(|f| f.level));
        out
    }

    #[cfg(test)]
    fn form(&self) -> SententialForm {
        let mut out: Vec<Symbol> = self.emitted.iter().map(|&t| Symbol::Terminal(t)).collect();
        out.extend(self.stack.iter().rev().map(|f| f.sym));
        SententialForm::new(out)
    }
}

/// Plays the winner's strategy against `adversary` for up to `max_segments`
/// segments, starting from the start symbol.
pub fn simulate(
    syn: &Synthesis,
    adversary: &mut dyn Adversary,
    opts: SimulationOptions,
) -> Result<PlayTrace> {
    let g = syn.grammar();
    let d = syn.dpa();
    let mut q = d.initial();
    let mut x = g.start();
    let mut segments = Vec::new();
    let mut outcome = Outcome::Completed;
    for _ in 0..opts.max_segments {
        let end = match &syn.table {
            StrategyTable::Prover(t) => prover_segment(syn, t, q, x, adversary, opts)?,
            StrategyTable::Refuter(t) => refuter_segment(syn, t, q, x, adversary, opts)?,
        };
        match end {
            SegmentEnd::Done(rec) => {
                q = rec.state;
                x = rec.target;
                segments.push(rec);
            }
            SegmentEnd::Deadlock => {
                outcome = Outcome::Deadlock;
                break;
            }
            SegmentEnd::Budget => {
                outcome = match syn.winner {
                    Owner::Prover => Outcome::ProverInfiniteSegment,
                    Owner::Refuter => Outcome::RefuterSegmentOverrun,
                };
                break;
            }
        }
    }
    let window = syn.game.vertices.len();
    let tail = &segments[segments.len().saturating_sub(window)..];
    let window_max = tail.iter().map(|s| s.priority).max();
    let window_winner = match (&outcome, window_max) {
        (Outcome::Completed, Some(m)) if m % 2 == 1 => Owner::Refuter,
        _ => Owner::Prover,
    };
    Ok(PlayTrace {
        winner: syn.winner,
        refuter_segments_terminated: outcome != Outcome::RefuterSegmentOverrun,
        segments,
        outcome,
        window_max,
        window,
        window_winner,
    })
}

fn anchor_rules(g: &Grammar, x: usize) -> Vec<usize> {
    g.rules_of(x)
        .iter()
        .copied()
        .filter(|&r| g.rule(r).split_rightmost().is_some())
        .collect()
}

fn finish(
    syn: &Synthesis,
    q: usize,
    x: usize,
    rules: Vec<usize>,
    emitted: Vec<usize>,
    target: usize,
) -> Result<SegmentRecord> {
    let letters: Vec<usize> = emitted
        .iter()
        .map(|&t| syn.system.letter_of_terminal()[t])
        .collect();
    let (state, priority) = if letters.is_empty() {
        (q, 0)
    } else {
        syn.dpa().step(q, &letters)?
    };
    Ok(SegmentRecord {
        anchor_state: q,
        anchor: x,
        rules,
        emitted,
        state,
        priority,
        target,
        clause_chain: Vec::new(),
        level_chain: Vec::new(),
    })
}

fn prover_segment(
    syn: &Synthesis,
    table: &BTreeMap<(usize, usize), usize>,
    q: usize,
    x: usize,
    adversary: &mut dyn Adversary,
    opts: SimulationOptions,
) -> Result<SegmentEnd> {
    let g = syn.grammar();
    let sys = &syn.system;
    let k = *table.get(&(q, x)).ok_or_else(|| {
        Error::Invariant(format!("anchor ({q}, {}) outside prover's region", g.nonterminal_name(x)))
    })?;
    let big_clause = &syn.esol.get(q, x).clauses()[k];
    let options = anchor_rules(g, x);
    if options.is_empty() {
        return Ok(SegmentEnd::Deadlock);
    }
    // a clause H of sol(qη) with H.Y inside the chosen clause
    let fits = |r: usize| -> Option<(usize, Vec<Atom>)> {
        let (eta, y) = g.rule(r).split_rightmost()?;
        let f = sys.formula_of_sentential(q, eta, Level::Final);
        f.clauses()
            .iter()
            .find(|h| {
                h.iter()
                    .all(|a| big_clause.binary_search(&a.with_nonterminal(y)).is_ok())
            })
            .map(|h| (y, h.clone()))
    };
    let r = match g.owner(x).expect("game grammar") {
        Owner::Prover => *options
            .iter()
            .find(|&&r| fits(r).is_some())
            .ok_or_else(|| Error::Invariant("chosen clause matches no rule".into()))?,
        Owner::Refuter => options[adversary.choose(x, &options)],
    };
    let (y, mut clause) = fits(r).ok_or_else(|| {
        Error::Invariant(format!("rule {} misses the chosen clause", g.render_rule(r)))
    })?;
    let (eta, _) = g.rule(r).split_rightmost().expect("anchor rule");
    let mut cur = Cursor::new(sys, q, eta, 0, false);
    let mut rules = vec![r];
    let mut chain = vec![clause.clone()];
    let mut steps = 0;
    while let Some((z, _)) = cur.top() {
        steps += 1;
        if steps > opts.step_budget {
            return Ok(SegmentEnd::Budget);
        }
        let (r, next) = match g.owner(z).expect("game grammar") {
            Owner::Prover => g
                .rules_of(z)
                .iter()
                .find_map(|&r| {
                    let f = cur.successor_formula(&g.rule(r).rhs, 0);
                    subclause_within(&f, &clause).map(|h| (r, h))
                })
                .ok_or_else(|| {
                    Error::Invariant(format!(
                        "no prover rule refines the clause at {}",
                        g.nonterminal_name(z)
                    ))
                })?,
            Owner::Refuter => {
                let r = g.rules_of(z)[adversary.choose(z, g.rules_of(z))];
                let f = cur.successor_formula(&g.rule(r).rhs, 0);
                let h = subclause_within(&f, &clause).ok_or_else(|| {
                    Error::Invariant(format!("rule {} leaves no sub-clause", g.render_rule(r)))
                })?;
                (r, h)
            }
        };
        cur.apply(&g.rule(r).rhs, 0);
        rules.push(r);
        clause = next;
        chain.push(clause.clone());
    }
    let mut rec = finish(syn, q, x, rules, cur.emitted, y)?;
    let atom = Atom::new(rec.state, rec.priority);
    if clause != [atom] || big_clause.binary_search(&atom.with_nonterminal(y)).is_err() {
        return Err(Error::Invariant(format!(
            "segment effect {atom} is not in the tracked clause"
        )));
    }
    rec.clause_chain = chain;
    Ok(SegmentEnd::Done(rec))
}

fn refuter_segment(
    syn: &Synthesis,
    table: &BTreeMap<(usize, usize), Vec<ExtAtom>>,
    q: usize,
    x: usize,
    adversary: &mut dyn Adversary,
    opts: SimulationOptions,
) -> Result<SegmentEnd> {
    let g = syn.grammar();
    let sys = &syn.system;
    let chosen: BTreeSet<ExtAtom> = table
        .get(&(q, x))
        .ok_or_else(|| {
            Error::Invariant(format!(
                "anchor ({q}, {}) outside refuter's region",
                g.nonterminal_name(x)
            ))
        })?
        .iter()
        .copied()
        .collect();
    let options = anchor_rules(g, x);
    if options.is_empty() {
        return Ok(SegmentEnd::Deadlock);
    }
    let i0 = sys.final_round();
    // choice image on sol(qη) inside the chosen atoms with target Y
    let fits = |r: usize| -> Option<(usize, BTreeSet<Atom>)> {
        let (eta, y) = g.rule(r).split_rightmost()?;
        let f = sys.formula_of_sentential(q, eta, Level::Final);
        let projected: BTreeSet<Atom> = chosen
            .iter()
            .filter(|a| a.nt as usize == y)
            .map(|a| a.plain())
            .collect();
        refine_image(&f, &projected).map(|img| (y, img))
    };
    let r = match g.owner(x).expect("game grammar") {
        Owner::Refuter => *options
            .iter()
            .find(|&&r| fits(r).is_some())
            .ok_or_else(|| Error::Invariant("choice function matches no rule".into()))?,
        Owner::Prover => options[adversary.choose(x, &options)],
    };
    let (y, mut image) = fits(r).ok_or_else(|| {
        Error::Invariant(format!("rule {} escapes the choice function", g.render_rule(r)))
    })?;
    let (eta, _) = g.rule(r).split_rightmost().expect("anchor rule");
    let mut cur = Cursor::new(sys, q, eta, i0, true);
    let mut rules = vec![r];
    let mut chain = vec![cur.levels()];
    let mut steps = 0;
    while let Some((z, l)) = cur.top() {
        steps += 1;
        if steps > opts.step_budget {
            return Ok(SegmentEnd::Budget);
        }
        if l == 0 {
            return Err(Error::Invariant(
                "refuter reached a nonterminal at level 0".into(),
            ));
        }
        let (r, next) = match g.owner(z).expect("game grammar") {
            Owner::Refuter => g
                .rules_of(z)
                .iter()
                .find_map(|&r| {
                    let f = cur.successor_formula(&g.rule(r).rhs, l - 1);
                    refine_image(&f, &image).map(|img| (r, img))
                })
                .ok_or_else(|| {
                    Error::Invariant(format!(
                        "no refuter rule refines the choice at {}",
                        g.nonterminal_name(z)
                    ))
                })?,
            Owner::Prover => {
                let r = g.rules_of(z)[adversary.choose(z, g.rules_of(z))];
                let f = cur.successor_formula(&g.rule(r).rhs, l - 1);
                let img = refine_image(&f, &image).ok_or_else(|| {
                    Error::Invariant(format!(
                        "rule {} admits no refining choice",
                        g.render_rule(r)
                    ))
                })?;
                (r, img)
            }
        };
        cur.apply(&g.rule(r).rhs, l - 1);
        rules.push(r);
        image = next;
        chain.push(cur.levels());
    }
    let mut rec = finish(syn, q, x, rules, cur.emitted, y)?;
    let atom = Atom::new(rec.state, rec.priority);
    if !image.contains(&atom) || !chosen.contains(&atom.with_nonterminal(y)) {
        return Err(Error::Invariant(format!(
            "segment effect {atom} is not among the chosen atoms"
        )));
    }
    rec.level_chain = chain;
    Ok(SegmentEnd::Done(rec))
}
