//! Line-based text formats for grammars, NBAs and DPAs.
//!
//! Tokens are whitespace-separated and `#` starts a comment. Grammars:
//!
//! ```text
//! nonterminals X Y
//! terminals req ack s t
//! start X
//! owner refuter X
//! X -> req Y ack
//! Y ->
//! ```
//!
//! Automata list `states`, `alphabet`, `initial`, then `final q ...` (NBA) or
//! `priority q i` (DPA), and transitions `q a -> p`.

use std::collections::HashMap;
use std::fmt::Write;

use crate::automata::{Dpa, Nba};
use crate::error::{Error, Result};
use crate::grammar::{Grammar, Owner, Rule, Symbol};

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Non-empty lines with comments stripped, numbered from 1.
fn lines(src: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    src.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("");
        let toks: Vec<&str> = l.split_whitespace().collect();
        (!toks.is_empty()).then_some((i + 1, toks))
    })
}

fn index_names(line: usize, what: &str, names: &[&str]) -> Result<HashMap<String, usize>> {
    let mut map = HashMap::new();
    for (i, n) in names.iter().enumerate() {
        if map.insert(n.to_string(), i).is_some() {
            return Err(err(line, format!("duplicate {what} `{n}`")));
        }
    }
    Ok(map)
}

fn once<T>(slot: &mut Option<(usize, T)>, line: usize, key: &str, v: T) -> Result<()> {
    if slot.is_some() {
        return Err(err(line, format!("`{key}` given twice")));
    }
    *slot = Some((line, v));
    Ok(())
}

pub fn parse_grammar(src: &str) -> Result<Grammar> {
    let mut nts: Option<(usize, HashMap<String, usize>)> = None;
    let mut nt_names: Vec<String> = Vec::new();
    let mut ts: Option<(usize, HashMap<String, usize>)> = None;
    let mut t_names: Vec<String> = Vec::new();
    let mut start: Option<(usize, usize)> = None;
    let mut owners: Vec<Option<Owner>> = Vec::new();
    let mut any_owner = false;
    let mut rules = Vec::new();
    for (ln, toks) in lines(src) {
        if toks.len() >= 2 && toks[1] == "->" {
            let nts = &nts
                .as_ref()
                .ok_or_else(|| err(ln, "rule before `nonterminals`"))?
                .1;
            let ts = &ts.as_ref().ok_or_else(|| err(ln, "rule before `terminals`"))?.1;
            let lhs = *nts
                .get(toks[0])
                .ok_or_else(|| err(ln, format!("unknown nonterminal `{}`", toks[0])))?;
            let rhs = toks[2..]
                .iter()
                .map(|t| match (nts.get(*t), ts.get(*t)) {
                    (Some(&x), _) => Ok(Symbol::Nonterminal(x)),
                    (None, Some(&a)) => Ok(Symbol::Terminal(a)),
                    (None, None) => Err(err(ln, format!("unknown symbol `{t}`"))),
                })
                .collect::<Result<Vec<_>>>()?;
            rules.push(Rule::new(lhs, rhs));
            continue;
        }
        match toks[0] {
            "nonterminals" => {
                let map = index_names(ln, "nonterminal", &toks[1..])?;
                nt_names = toks[1..].iter().map(|s| s.to_string()).collect();
                owners = vec![None; nt_names.len()];
                once(&mut nts, ln, "nonterminals", map)?;
            }
            "terminals" => {
                let map = index_names(ln, "terminal", &toks[1..])?;
                t_names = toks[1..].iter().map(|s| s.to_string()).collect();
                once(&mut ts, ln, "terminals", map)?;
            }
            "start" => {
                let [_, s] = toks[..] else {
                    return Err(err(ln, "expected `start <nonterminal>`"));
                };
                let nts = &nts
                    .as_ref()
                    .ok_or_else(|| err(ln, "`start` before `nonterminals`"))?
                    .1;
                let x = *nts
                    .get(s)
                    .ok_or_else(|| err(ln, format!("unknown nonterminal `{s}`")))?;
                once(&mut start, ln, "start", x)?;
            }
            "owner" => {
                if toks.len() < 3 {
                    return Err(err(ln, "expected `owner prover|refuter <nonterminal>...`"));
                }
                let who = match toks[1] {
                    "prover" => Owner::Prover,
                    "refuter" => Owner::Refuter,
                    o => return Err(err(ln, format!("unknown owner `{o}`"))),
                };
                let nts = &nts
                    .as_ref()
                    .ok_or_else(|| err(ln, "`owner` before `nonterminals`"))?
                    .1;
                for s in &toks[2..] {
                    let x = *nts
                        .get(*s)
                        .ok_or_else(|| err(ln, format!("unknown nonterminal `{s}`")))?;
                    if owners[x].replace(who).is_some() {
                        return Err(err(ln, format!("owner of `{s}` given twice")));
                    }
                }
                any_owner = true;
            }
            k => return Err(err(ln, format!("unexpected `{k}`"))),
        }
    }
    let end = src.lines().count().max(1);
    if nts.is_none() {
        return Err(err(end, "missing `nonterminals`"));
    }
    if ts.is_none() {
        return Err(err(end, "missing `terminals`"));
    }
    let (_, start) = start.ok_or_else(|| err(end, "missing `start`"))?;
    let ownership = if any_owner {
        Some(
            owners
                .iter()
                .enumerate()
                .map(|(i, o)| o.ok_or_else(|| err(end, format!("no owner for `{}`", nt_names[i]))))
                .collect::<Result<Vec<_>>>()?,
        )
    } else {
        None
    };
    let g = Grammar::new(nt_names, t_names, rules, start, ownership);
    g.ensure_valid()?;
    Ok(g)
}

pub fn write_grammar(g: &Grammar) -> String {
    let mut out = String::new();
    writeln!(out, "nonterminals {}", g.nonterminals().join(" ")).unwrap();
    writeln!(out, "terminals {}", g.terminals().join(" ")).unwrap();
    writeln!(out, "start {}", g.nonterminal_name(g.start())).unwrap();
    if let Some(own) = g.ownership() {
        for who in [Owner::Prover, Owner::Refuter] {
            let names: Vec<&str> = own
                .iter()
                .enumerate()
                .filter(|(_, o)| **o == who)
                .map(|(i, _)| g.nonterminal_name(i))
                .collect();
            if !names.is_empty() {
                let w = if who == Owner::Prover { "prover" } else { "refuter" };
                writeln!(out, "owner {w} {}", names.join(" ")).unwrap();
            }
        }
    }
    for r in g.rules() {
        let mut line = format!("{} ->", g.nonterminal_name(r.lhs));
        for s in &r.rhs {
            line.push(' ');
            line.push_str(g.symbol_name(*s));
        }
        writeln!(out, "{line}").unwrap();
    }
    out
}

/// Shared header and transitions of both automaton formats.
struct AutomatonText {
    states: Vec<String>,
    alphabet: Vec<String>,
    initial: usize,
    /// `(line, tokens)` of lines other than header and transitions.
    extra: Vec<(usize, Vec<String>)>,
    transitions: Vec<(usize, usize, usize, usize)>,
    state_index: HashMap<String, usize>,
    end: usize,
}

fn parse_automaton(src: &str, extra_keys: &[&str]) -> Result<AutomatonText> {
    let mut states: Option<(usize, HashMap<String, usize>)> = None;
    let mut state_names = Vec::new();
    let mut alpha: Option<(usize, HashMap<String, usize>)> = None;
    let mut alpha_names = Vec::new();
    let mut initial: Option<(usize, usize)> = None;
    let mut extra = Vec::new();
    let mut transitions = Vec::new();
    for (ln, toks) in lines(src) {
        if toks.len() == 4 && toks[2] == "->" {
            let st = &states
                .as_ref()
                .ok_or_else(|| err(ln, "transition before `states`"))?
                .1;
            let al = &alpha
                .as_ref()
                .ok_or_else(|| err(ln, "transition before `alphabet`"))?
                .1;
            let q = *st
                .get(toks[0])
                .ok_or_else(|| err(ln, format!("unknown state `{}`", toks[0])))?;
            let a = *al
                .get(toks[1])
                .ok_or_else(|| err(ln, format!("unknown letter `{}`", toks[1])))?;
            let p = *st
                .get(toks[3])
                .ok_or_else(|| err(ln, format!("unknown state `{}`", toks[3])))?;
            transitions.push((ln, q, a, p));
            continue;
        }
        match toks[0] {
            "states" => {
                let map = index_names(ln, "state", &toks[1..])?;
                state_names = toks[1..].iter().map(|s| s.to_string()).collect();
                once(&mut states, ln, "states", map)?;
            }
            "alphabet" => {
                let map = index_names(ln, "letter", &toks[1..])?;
                alpha_names = toks[1..].iter().map(|s| s.to_string()).collect();
                once(&mut alpha, ln, "alphabet", map)?;
            }
            "initial" => {
                let [_, s] = toks[..] else {
                    return Err(err(ln, "expected `initial <state>`"));
                };
                let st = &states
                    .as_ref()
                    .ok_or_else(|| err(ln, "`initial` before `states`"))?
                    .1;
                let q = *st
                    .get(s)
                    .ok_or_else(|| err(ln, format!("unknown state `{s}`")))?;
                once(&mut initial, ln, "initial", q)?;
            }
            k if extra_keys.contains(&k) => {
                if states.is_none() {
                    return Err(err(ln, format!("`{k}` before `states`")));
                }
                extra.push((ln, toks.iter().map(|s| s.to_string()).collect()));
            }
            k => return Err(err(ln, format!("unexpected `{k}`"))),
        }
    }
    let end = src.lines().count().max(1);
    let (_, state_index) = states.ok_or_else(|| err(end, "missing `states`"))?;
    if alpha.is_none() {
        return Err(err(end, "missing `alphabet`"));
    }
    let (_, initial) = initial.ok_or_else(|| err(end, "missing `initial`"))?;
    Ok(AutomatonText {
        states: state_names,
        alphabet: alpha_names,
        initial,
        extra,
        transitions,
        state_index,
        end,
    })
}

impl AutomatonText {
    fn state(&self, line: usize, name: &str) -> Result<usize> {
        self.state_index
            .get(name)
            .copied()
            .ok_or_else(|| err(line, format!("unknown state `{name}`")))
    }
}

pub fn parse_nba(src: &str) -> Result<Nba> {
    let t = parse_automaton(src, &["final"])?;
    let mut finals = vec![false; t.states.len()];
    for (ln, toks) in &t.extra {
        for s in &toks[1..] {
            finals[t.state(*ln, s)?] = true;
        }
    }
    Nba::new(
        t.states,
        t.alphabet,
        t.initial,
        finals,
        t.transitions.into_iter().map(|(_, q, a, p)| (q, a, p)),
    )
}

pub fn write_nba(a: &Nba) -> String {
    let mut out = String::new();
    let names = a.state_names();
    writeln!(out, "states {}", names.join(" ")).unwrap();
    writeln!(out, "alphabet {}", a.alphabet().join(" ")).unwrap();
    writeln!(out, "initial {}", names[a.initial()]).unwrap();
    let finals: Vec<&str> = (0..a.num_states())
        .filter(|&q| a.is_final(q))
        .map(|q| names[q].as_str())
        .collect();
    if !finals.is_empty() {
        writeln!(out, "final {}", finals.join(" ")).unwrap();
    }
    for (q, l, p) in a.transitions() {
        writeln!(out, "{} {} -> {}", names[q], a.alphabet()[l], names[p]).unwrap();
    }
    out
}

pub fn parse_dpa(src: &str) -> Result<Dpa> {
    let t = parse_automaton(src, &["priority"])?;
    let n = t.states.len();
    let mut prio: Vec<Option<u32>> = vec![None; n];
    for (ln, toks) in &t.extra {
        let [_, s, i] = &toks[..] else {
            return Err(err(*ln, "expected `priority <state> <n>`"));
        };
        let q = t.state(*ln, s)?;
        let i: u32 = i
            .parse()
            .map_err(|_| err(*ln, format!("priority `{i}` is not a natural number")))?;
        if prio[q].replace(i).is_some() {
            return Err(err(*ln, format!("priority of `{s}` given twice")));
        }
    }
    let mut delta: Vec<Vec<Option<usize>>> = vec![vec![None; t.alphabet.len()]; n];
    for &(ln, q, a, p) in &t.transitions {
        if delta[q][a].replace(p).is_some() {
            return Err(err(
                ln,
                format!("second transition for `{} {}`", t.states[q], t.alphabet[a]),
            ));
        }
    }
    let priority = prio
        .iter()
        .enumerate()
        .map(|(q, p)| p.ok_or_else(|| err(t.end, format!("state `{}` has no priority", t.states[q]))))
        .collect::<Result<Vec<_>>>()?;
    let delta = delta
        .iter()
        .enumerate()
        .map(|(q, row)| {
            row.iter()
                .enumerate()
                .map(|(a, p)| {
                    p.ok_or_else(|| {
                        err(
                            t.end,
                            format!("no transition for `{} {}`", t.states[q], t.alphabet[a]),
                        )
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Dpa::new(t.states, t.alphabet, t.initial, delta, priority)
}

pub fn write_dpa(d: &Dpa) -> String {
    let mut out = String::new();
    let names = d.state_names();
    writeln!(out, "states {}", names.join(" ")).unwrap();
    writeln!(out, "alphabet {}", d.alphabet().join(" ")).unwrap();
    writeln!(out, "initial {}", names[d.initial()]).unwrap();
    for q in 0..d.num_states() {
        writeln!(out, "priority {} {}", names[q], d.priority(q)).unwrap();
    }
    for q in 0..d.num_states() {
        for (a, l) in d.alphabet().iter().enumerate() {
            writeln!(out, "{} {} -> {}", names[q], l, names[d.next(q, a)]).unwrap();
        }
    }
    out
}
