//! Context-free grammars, game grammars and their ω-graph.
//!
//! Symbols are interned: terminals and nonterminals are indices into the
//! grammar's name tables. A grammar is a plain value; [`Grammar::validate`]
//! reports every structural problem instead of stopping at the first one, and
//! the solvers call [`Grammar::ensure_valid`] before they start.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::automata::Nba;
use crate::error::{Error, Result};

/// A grammar symbol, referring into the grammar's terminal or nonterminal table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    Terminal(usize),
    Nonterminal(usize),
}

impl Symbol {
    pub fn is_terminal(self) -> bool {
        matches!(self, Symbol::Terminal(_))
    }

    pub fn as_nonterminal(self) -> Option<usize> {
        match self {
            Symbol::Nonterminal(x) => Some(x),
            Symbol::Terminal(_) => None,
        }
    }

    pub fn as_terminal(self) -> Option<usize> {
        match self {
            Symbol::Terminal(t) => Some(t),
            Symbol::Nonterminal(_) => None,
        }
    }
}

/// The two players of a grammar game.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Owner {
    Prover,
    Refuter,
}

impl Owner {
    pub fn opponent(self) -> Owner {
        match self {
            Owner::Prover => Owner::Refuter,
            Owner::Refuter => Owner::Prover,
        }
    }
}

impl fmt::Display for Owner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Owner::Prover => f.write_str("prover"),
            Owner::Refuter => f.write_str("refuter"),
        }
    }
}

/// A production `lhs -> rhs`. An empty `rhs` is ε.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Rule {
    pub lhs: usize,
    pub rhs: Vec<Symbol>,
}

impl Rule {
    pub fn new(lhs: usize, rhs: Vec<Symbol>) -> Self {
        Rule { lhs, rhs }
    }

    /// Splits `X -> η Y` into `(η, Y)` when the rightmost symbol is a nonterminal.
    pub fn split_rightmost(&self) -> Option<(&[Symbol], usize)> {
        let (last, prefix) = self.rhs.split_last()?;
        last.as_nonterminal().map(|y| (prefix, y))
    }
}

/// A structural problem found by [`Grammar::validate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    MissingRule { nonterminal: String },
    UndeclaredSymbol { rule: usize, symbol: String },
    UndeclaredLhs { rule: usize },
    BadStart,
    PartialOwnership { declared: usize, expected: usize },
    NameClash { name: String },
    DuplicateName { name: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MissingRule { nonterminal } => write!(f, "no rule for {nonterminal}"),
            Violation::UndeclaredSymbol { rule, symbol } => {
                write!(f, "rule {rule} uses undeclared symbol {symbol}")
            }
            Violation::UndeclaredLhs { rule } => write!(f, "rule {rule} has an undeclared lhs"),
            Violation::BadStart => f.write_str("start symbol is not a declared nonterminal"),
            Violation::PartialOwnership { declared, expected } => {
                write!(f, "ownership covers {declared} of {expected} nonterminals")
            }
            Violation::NameClash { name } => {
                write!(f, "{name} is declared both as terminal and nonterminal")
            }
            Violation::DuplicateName { name } => write!(f, "{name} is declared twice"),
        }
    }
}

/// A context-free grammar, optionally with a prover/refuter partition of its
/// nonterminals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Grammar {
    nonterminals: Vec<String>,
    terminals: Vec<String>,
    rules: Vec<Rule>,
    start: usize,
    ownership: Option<Vec<Owner>>,
    by_lhs: Vec<Vec<usize>>,
}

impl Grammar {
    /// Builds a grammar without checking it; see [`Grammar::validate`].
    pub fn new(
        nonterminals: Vec<String>,
        terminals: Vec<String>,
        rules: Vec<Rule>,
        start: usize,
        ownership: Option<Vec<Owner>>,
    ) -> Self {
        let mut by_lhs = vec![Vec::new(); nonterminals.len()];
        for (i, r) in rules.iter().enumerate() {
            if let Some(slot) = by_lhs.get_mut(r.lhs) {
                slot.push(i);
            }
        }
        Grammar {
            nonterminals,
            terminals,
            rules,
            start,
            ownership,
            by_lhs,
        }
    }

    pub fn nonterminals(&self) -> &[String] {
        &self.nonterminals
    }

    pub fn terminals(&self) -> &[String] {
        &self.terminals
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn rule(&self, i: usize) -> &Rule {
        &self.rules[i]
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn ownership(&self) -> Option<&[Owner]> {
        self.ownership.as_deref()
    }

    pub fn owner(&self, nt: usize) -> Option<Owner> {
        self.ownership.as_ref().and_then(|o| o.get(nt).copied())
    }

    /// Indices of the rules with `nt` on the left.
    pub fn rules_of(&self, nt: usize) -> &[usize] {
        &self.by_lhs[nt]
    }

    pub fn nonterminal_index(&self, name: &str) -> Option<usize> {
        self.nonterminals.iter().position(|n| n == name)
    }

    pub fn terminal_index(&self, name: &str) -> Option<usize> {
        self.terminals.iter().position(|n| n == name)
    }

    pub fn nonterminal_name(&self, nt: usize) -> &str {
        &self.nonterminals[nt]
    }

    pub fn terminal_name(&self, t: usize) -> &str {
        &self.terminals[t]
    }

    pub fn symbol_name(&self, s: Symbol) -> &str {
        match s {
            Symbol::Terminal(t) => &self.terminals[t],
            Symbol::Nonterminal(x) => &self.nonterminals[x],
        }
    }

    /// Same grammar with a different ownership map.
    pub fn with_ownership(self, ownership: Option<Vec<Owner>>) -> Self {
        Grammar { ownership, ..self }
    }

    /// Same grammar with every nonterminal given to one player.
    pub fn owned_by(self, owner: Owner) -> Self {
        let n = self.nonterminals.len();
        self.with_ownership(Some(vec![owner; n]))
    }

    /// Renders a rule as `X -> a Y b`.
    pub fn render_rule(&self, i: usize) -> String {
        let r = &self.rules[i];
        let mut s = format!("{} ->", self.nonterminals[r.lhs]);
        for sym in &r.rhs {
            s.push(' ');
            s.push_str(self.symbol_name(*sym));
        }
        s
    }

    /// Every violation of the grammar's structural assumptions; empty means valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        for name in self.nonterminals.iter().chain(&self.terminals) {
            if !seen.insert(name.as_str()) {
                if self.nonterminals.contains(name) && self.terminals.contains(name) {
                    out.push(Violation::NameClash { name: name.clone() });
                } else {
                    out.push(Violation::DuplicateName { name: name.clone() });
                }
            }
        }
        if self.start >= self.nonterminals.len() {
            out.push(Violation::BadStart);
        }
        for (i, r) in self.rules.iter().enumerate() {
            if r.lhs >= self.nonterminals.len() {
                out.push(Violation::UndeclaredLhs { rule: i });
            }
            for s in &r.rhs {
                let ok = match *s {
                    Symbol::Terminal(t) => t < self.terminals.len(),
                    Symbol::Nonterminal(x) => x < self.nonterminals.len(),
                };
                if !ok {
                    let symbol = match *s {
                        Symbol::Terminal(t) => format!("terminal #{t}"),
                        Symbol::Nonterminal(x) => format!("nonterminal #{x}"),
                    };
                    out.push(Violation::UndeclaredSymbol { rule: i, symbol });
                }
            }
        }
        for (x, rules) in self.by_lhs.iter().enumerate() {
            if rules.is_empty() {
                out.push(Violation::MissingRule {
                    nonterminal: self.nonterminals[x].clone(),
                });
            }
        }
        if let Some(own) = &self.ownership {
            if own.len() != self.nonterminals.len() {
                out.push(Violation::PartialOwnership {
                    declared: own.len(),
                    expected: self.nonterminals.len(),
                });
            }
        }
        out
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidGrammar(v))
        }
    }

    /// Valid and with total ownership, as required for games.
    pub fn ensure_game(&self) -> Result<()> {
        self.ensure_valid()?;
        if self.ownership.is_none() {
            return Err(Error::MissingOwnership);
        }
        Ok(())
    }

    /// One edge `(X, α, Y)` per rule `X -> α Y`.
    pub fn omega_graph(&self) -> OmegaGraph {
        let edges = self
            .rules
            .iter()
            .enumerate()
            .filter_map(|(i, r)| {
                r.split_rightmost().map(|(label, dst)| OmegaEdge {
                    src: r.lhs,
                    label: SententialForm(label.to_vec()),
                    dst,
                    rule: i,
                })
            })
            .collect();
        OmegaGraph {
            vertices: self.nonterminals.len(),
            edges,
        }
    }
}

/// A sequence of grammar symbols.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SententialForm(pub Vec<Symbol>);

impl SententialForm {
    pub fn new(symbols: Vec<Symbol>) -> Self {
        SententialForm(symbols)
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Position and identity of the leftmost nonterminal.
    pub fn leftmost_nonterminal(&self) -> Option<(usize, usize)> {
        self.0
            .iter()
            .enumerate()
            .find_map(|(i, s)| s.as_nonterminal().map(|x| (i, x)))
    }

    pub fn is_terminal(&self) -> bool {
        self.0.iter().all(|s| s.is_terminal())
    }

    /// The longest prefix made of terminals.
    pub fn terminal_prefix(&self) -> Vec<usize> {
        self.0.iter().map_while(|s| s.as_terminal()).collect()
    }

    /// Replaces the symbol at `pos` by `rhs`.
    pub fn replace(&self, pos: usize, rhs: &[Symbol]) -> SententialForm {
        let mut v = Vec::with_capacity(self.0.len() + rhs.len());
        v.extend_from_slice(&self.0[..pos]);
        v.extend_from_slice(rhs);
        v.extend_from_slice(&self.0[pos + 1..]);
        SententialForm(v)
    }
}

/// Edge `(src, label, dst)` of the ω-graph, contributed by rule `rule`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OmegaEdge {
    pub src: usize,
    pub label: SententialForm,
    pub dst: usize,
    pub rule: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OmegaGraph {
    pub vertices: usize,
    pub edges: Vec<OmegaEdge>,
}

impl OmegaGraph {
    pub fn edges_from(&self, x: usize) -> impl Iterator<Item = &OmegaEdge> {
        self.edges.iter().filter(move |e| e.src == x)
    }
}

/// `base` if unused, otherwise `base` followed by the smallest natural number
/// that makes it unused.
pub fn fresh_name<'a>(base: &str, used: impl IntoIterator<Item = &'a String> + Clone) -> String {
    let taken = |cand: &str| used.clone().into_iter().any(|u| u == cand);
    if !taken(base) {
        return base.to_string();
    }
    (1..)
        .map(|k| format!("{base}{k}"))
        .find(|c| !taken(c))
        .expect("unbounded search")
}

/// Grammar whose ω-language is the union of `V_i U_i^ω` over the given pairs.
///
/// All nonterminals of the inputs are kept apart, renamed on collision; the
/// terminals are merged by name. A fresh start symbol `S` gets one rule
/// `S -> S_{V_i} R_i` per pair, and each fresh `R_i` loops via `R_i -> S_{U_i} R_i`.
pub fn grammar_from_union(parts: &[(Grammar, Grammar)]) -> Result<Grammar> {
    if parts.is_empty() {
        return Err(Error::EmptyUnion);
    }
    for (v, u) in parts {
        v.ensure_valid()?;
        u.ensure_valid()?;
    }
    let mut nonterminals: Vec<String> = Vec::new();
    let mut terminals: Vec<String> = Vec::new();
    let mut rules = Vec::new();
    let mut starts = Vec::new();
    let all_owned = parts
        .iter()
        .all(|(v, u)| v.ownership.is_some() && u.ownership.is_some());
    let mut ownership = Vec::new();

    let mut used: Vec<String> = Vec::new();
    for (v, u) in parts {
        used.extend(v.terminals.iter().cloned());
        used.extend(u.terminals.iter().cloned());
    }

    for g in parts.iter().flat_map(|(v, u)| [v, u]) {
        let nt_map: Vec<usize> = g
            .nonterminals
            .iter()
            .map(|name| {
                let fresh = fresh_name(name, &used);
                used.push(fresh.clone());
                nonterminals.push(fresh);
                nonterminals.len() - 1
            })
            .collect();
        let t_map: Vec<usize> = g
            .terminals
            .iter()
            .map(|name| match terminals.iter().position(|t| t == name) {
                Some(i) => i,
                None => {
                    terminals.push(name.clone());
                    terminals.len() - 1
                }
            })
            .collect();
        for r in &g.rules {
            let rhs = r
                .rhs
                .iter()
                .map(|s| match *s {
                    Symbol::Terminal(t) => Symbol::Terminal(t_map[t]),
                    Symbol::Nonterminal(x) => Symbol::Nonterminal(nt_map[x]),
                })
                .collect();
            rules.push(Rule::new(nt_map[r.lhs], rhs));
        }
        if let Some(own) = &g.ownership {
            ownership.extend_from_slice(own);
        }
        starts.push(nt_map[g.start]);
    }

    let start_name = fresh_name("S", &used);
    used.push(start_name.clone());
    nonterminals.push(start_name);
    let start = nonterminals.len() - 1;
    ownership.push(Owner::Refuter);
    for (i, pair) in starts.chunks(2).enumerate() {
        let r_name = fresh_name(&format!("R{}", i + 1), &used);
        used.push(r_name.clone());
        nonterminals.push(r_name);
        let r = nonterminals.len() - 1;
        ownership.push(Owner::Refuter);
        rules.push(Rule::new(
            start,
            vec![Symbol::Nonterminal(pair[0]), Symbol::Nonterminal(r)],
        ));
        rules.push(Rule::new(
            r,
            vec![Symbol::Nonterminal(pair[1]), Symbol::Nonterminal(r)],
        ));
    }
    let ownership = all_owned.then_some(ownership);
    Ok(Grammar::new(nonterminals, terminals, rules, start, ownership))
}

/// Names chosen by [`lift_finite_game`] for the symbols and state it adds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LiftNames {
    pub end_marker: String,
    pub start: String,
    pub tail: String,
    pub state: String,
}

/// Turns a finite-word game `(g, a)` into an ω-game whose words are `L(G)·#^ω`.
///
/// The grammar gains `S_ω -> S H_ω` and `H_ω -> # H_ω` (both owned by refuter
/// when the grammar carries ownership). The automaton gains a state `q_ω`, the
/// only final state, reached by a copy of every transition that enters a final
/// state, and looping on `#`. When the initial state is final, an extra
/// `q_init -#-> q_ω` keeps the empty word accepted.
pub fn lift_finite_game(g: &Grammar, a: &Nba) -> Result<(Grammar, Nba, LiftNames)> {
    g.ensure_valid()?;
    let mut symbol_names: Vec<String> = g.terminals.clone();
    symbol_names.extend(a.alphabet().iter().cloned());
    symbol_names.extend(g.nonterminals.iter().cloned());
    let end_marker = fresh_name("hash", &symbol_names);
    symbol_names.push(end_marker.clone());
    let start_name = fresh_name("S_omega", &symbol_names);
    symbol_names.push(start_name.clone());
    let tail_name = fresh_name("H_omega", &symbol_names);

    let mut terminals = g.terminals.clone();
    terminals.push(end_marker.clone());
    let hash = terminals.len() - 1;
    let mut nonterminals = g.nonterminals.clone();
    nonterminals.push(start_name.clone());
    let s_omega = nonterminals.len() - 1;
    nonterminals.push(tail_name.clone());
    let h_omega = nonterminals.len() - 1;
    let mut rules = g.rules.clone();
    rules.push(Rule::new(
        s_omega,
        vec![Symbol::Nonterminal(g.start), Symbol::Nonterminal(h_omega)],
    ));
    rules.push(Rule::new(
        h_omega,
        vec![Symbol::Terminal(hash), Symbol::Nonterminal(h_omega)],
    ));
    let ownership = g.ownership.clone().map(|mut o| {
        o.push(Owner::Refuter);
        o.push(Owner::Refuter);
        o
    });
    let lifted_g = Grammar::new(nonterminals, terminals, rules, s_omega, ownership);

    let state_name = fresh_name("q_omega", a.state_names());
    let mut alphabet = a.alphabet().to_vec();
    alphabet.push(end_marker.clone());
    let a_hash = alphabet.len() - 1;
    let mut states = a.state_names().to_vec();
    states.push(state_name.clone());
    let q_omega = states.len() - 1;
    let mut transitions = Vec::new();
    for (q, c, p) in a.transitions() {
        transitions.push((q, c, p));
        if a.is_final(p) {
            transitions.push((q, c, q_omega));
        }
    }
    transitions.push((q_omega, a_hash, q_omega));
    if a.is_final(a.initial()) {
        transitions.push((a.initial(), a_hash, q_omega));
    }
    let mut finals = vec![false; states.len()];
    finals[q_omega] = true;
    let lifted_a = Nba::new(states, alphabet, a.initial(), finals, transitions)?;
    Ok((
        lifted_g,
        lifted_a,
        LiftNames {
            end_marker,
            start: start_name,
            tail: tail_name,
            state: state_name,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples;

    #[test]
    fn running_example_is_valid() {
        assert!(examples::g_ex().validate().is_empty());
    }

    #[test]
    fn missing_rule_is_reported() {
        let g = Grammar::new(
            vec!["S".into(), "Z".into()],
            vec!["a".into()],
            vec![Rule::new(0, vec![Symbol::Terminal(0)])],
            0,
            None,
        );
        let v = g.validate();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].to_string(), "no rule for Z");
    }

    #[test]
    fn undeclared_symbol_is_reported() {
        let g = Grammar::new(
            vec!["S".into()],
            vec!["a".into()],
            vec![Rule::new(0, vec![Symbol::Terminal(3), Symbol::Nonterminal(0)])],
            0,
            None,
        );
        assert!(matches!(
            g.validate().as_slice(),
            [Violation::UndeclaredSymbol { rule: 0, .. }]
        ));
    }

    #[test]
    fn partial_ownership_and_clash() {
        let g = Grammar::new(
            vec!["S".into(), "a".into()],
            vec!["a".into()],
            vec![Rule::new(0, vec![]), Rule::new(1, vec![])],
            0,
            Some(vec![Owner::Prover]),
        );
        let v = g.validate();
        assert!(v.contains(&Violation::NameClash { name: "a".into() }));
        assert!(v.contains(&Violation::PartialOwnership {
            declared: 1,
            expected: 2
        }));
        assert!(matches!(g.ensure_valid(), Err(Error::InvalidGrammar(_))));
    }

    #[test]
    fn omega_graph_of_running_example() {
        let g = examples::g_ex();
        let og = g.omega_graph();
        let x = g.nonterminal_index("X").unwrap();
        assert_eq!(og.edges.len(), 1);
        let e = &og.edges[0];
        assert_eq!((e.src, e.dst), (x, x));
        assert_eq!(e.label.symbols(), &[Symbol::Nonterminal(x)]);
    }

    #[test]
    fn omega_graph_small_cases() {
        let g = Grammar::new(
            vec!["S".into()],
            vec!["a".into()],
            vec![Rule::new(0, vec![Symbol::Terminal(0), Symbol::Nonterminal(0)])],
            0,
            None,
        );
        let og = g.omega_graph();
        assert_eq!(og.edges.len(), 1);
        assert_eq!(og.edges[0].label.symbols(), &[Symbol::Terminal(0)]);

        let g = Grammar::new(
            vec!["S".into()],
            vec!["a".into()],
            vec![Rule::new(0, vec![Symbol::Terminal(0)])],
            0,
            None,
        );
        assert!(g.omega_graph().edges.is_empty());
    }

    #[test]
    fn sentential_form_helpers() {
        let f = SententialForm(vec![
            Symbol::Terminal(0),
            Symbol::Terminal(1),
            Symbol::Nonterminal(0),
            Symbol::Terminal(0),
        ]);
        assert_eq!(f.terminal_prefix(), vec![0, 1]);
        assert_eq!(f.leftmost_nonterminal(), Some((2, 0)));
        let g = f.replace(2, &[]);
        assert!(g.is_terminal());
        assert_eq!(g.len(), 3);
    }

    #[test]
    fn fresh_names() {
        let used = vec!["S".to_string(), "S1".to_string(), "T".to_string()];
        assert_eq!(fresh_name("S", &used), "S2");
        assert_eq!(fresh_name("R", &used), "R");
        assert_eq!(fresh_name("T", &used), "T1");
    }

    fn single(nt: &str, t: &str) -> Grammar {
        Grammar::new(
            vec![nt.into()],
            vec![t.into()],
            vec![Rule::new(0, vec![Symbol::Terminal(0)])],
            0,
            None,
        )
    }

    #[test]
    fn union_shape() {
        let g = grammar_from_union(&[(single("SV", "a"), single("SU", "b"))]).unwrap();
        assert!(g.validate().is_empty());
        assert_eq!(g.nonterminal_name(g.start()), "S");
        assert_eq!(g.rules().len(), 4);
        let s_rules: Vec<_> = g.rules_of(g.start()).iter().map(|&r| g.render_rule(r)).collect();
        assert_eq!(s_rules, vec!["S -> SV R1"]);
        let r = g.nonterminal_index("R1").unwrap();
        assert_eq!(g.render_rule(g.rules_of(r)[0]), "R1 -> SU R1");

        let two = grammar_from_union(&[
            (single("SV", "a"), single("SU", "b")),
            (single("SV", "c"), single("SU", "a")),
        ])
        .unwrap();
        assert_eq!(two.rules_of(two.start()).len(), 2);
        assert!(two.nonterminal_index("R2").is_some());
        assert!(two.nonterminal_index("SV1").is_some());
        assert_eq!(two.terminals().len(), 3);
    }

    #[test]
    fn union_requires_parts() {
        assert!(matches!(grammar_from_union(&[]), Err(Error::EmptyUnion)));
    }
}
