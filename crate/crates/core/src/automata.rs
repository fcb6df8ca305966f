//! Büchi and parity automata over a named alphabet, plus membership of
//! ultimately periodic words.
//!
//! Letters are indices into the automaton's alphabet. Runs start in the
//! initial state. For a single letter step `q -a-> q'` a final state counts as
//! visited when `q` or `q'` is final; longer words accumulate the flag.

use std::collections::{BTreeMap, VecDeque};

use crate::error::{Error, Result};

/// A finite word `stem · period^ω`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct UpWord {
    pub stem: Vec<usize>,
    pub period: Vec<usize>,
}

impl UpWord {
    pub fn new(stem: Vec<usize>, period: Vec<usize>) -> Result<Self> {
        if period.is_empty() {
            return Err(Error::InvalidAutomaton(
                "ultimately periodic word needs a nonempty period".into(),
            ));
        }
        Ok(UpWord { stem, period })
    }
}

fn check_word(alphabet: &[String], w: &[usize]) -> Result<()> {
    match w.iter().find(|&&c| c >= alphabet.len()) {
        Some(c) => Err(Error::UnknownLetter(format!("#{c}"))),
        None => Ok(()),
    }
}

/// Maps letter names to indices of `alphabet`.
pub fn word_from_names<S: AsRef<str>>(alphabet: &[String], names: &[S]) -> Result<Vec<usize>> {
    names
        .iter()
        .map(|n| {
            alphabet
                .iter()
                .position(|a| a == n.as_ref())
                .ok_or_else(|| Error::UnknownLetter(n.as_ref().to_string()))
        })
        .collect()
}

/// Position in `alphabet` of every grammar terminal, matched by name.
pub fn letter_map(terminals: &[String], alphabet: &[String]) -> Result<Vec<usize>> {
    terminals
        .iter()
        .map(|t| {
            alphabet
                .iter()
                .position(|a| a == t)
                .ok_or_else(|| Error::AlphabetMismatch(t.clone()))
        })
        .collect()
}

/// Nondeterministic Büchi automaton.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Nba {
    states: Vec<String>,
    alphabet: Vec<String>,
    initial: usize,
    finals: Vec<bool>,
    succ: Vec<Vec<Vec<usize>>>,
}

impl Nba {
    pub fn new(
        states: Vec<String>,
        alphabet: Vec<String>,
        initial: usize,
        finals: Vec<bool>,
        transitions: impl IntoIterator<Item = (usize, usize, usize)>,
    ) -> Result<Self> {
        let n = states.len();
        if initial >= n {
            return Err(Error::InvalidAutomaton("initial state out of range".into()));
        }
        if finals.len() != n {
            return Err(Error::InvalidAutomaton(
                "final-state flags do not match the state count".into(),
            ));
        }
        let mut succ = vec![vec![Vec::new(); alphabet.len()]; n];
        for (q, a, p) in transitions {
            if q >= n || p >= n {
                return Err(Error::InvalidAutomaton(format!(
                    "transition ({q}, {a}, {p}) mentions an unknown state"
                )));
            }
            if a >= alphabet.len() {
                return Err(Error::UnknownLetter(format!("#{a}")));
            }
            succ[q][a].push(p);
        }
        for row in &mut succ {
            for targets in row.iter_mut() {
                targets.sort_unstable();
                targets.dedup();
            }
        }
        Ok(Nba {
            states,
            alphabet,
            initial,
            finals,
            succ,
        })
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn state_names(&self) -> &[String] {
        &self.states
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn is_final(&self, q: usize) -> bool {
        self.finals[q]
    }

    pub fn finals(&self) -> &[bool] {
        &self.finals
    }

    pub fn successors(&self, q: usize, a: usize) -> &[usize] {
        &self.succ[q][a]
    }

    pub fn letter_index(&self, name: &str) -> Option<usize> {
        self.alphabet.iter().position(|a| a == name)
    }

    pub fn transitions(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.succ.iter().enumerate().flat_map(|(q, row)| {
            row.iter()
                .enumerate()
                .flat_map(move |(a, ps)| ps.iter().map(move |&p| (q, a, p)))
        })
    }

    /// States reachable from `q` on `w`, each flagged with whether some path
    /// visits a final state. A state appears once, with the flag set if any
    /// path to it is flagged. The empty word yields `{(q, false)}`.
    pub fn step_sets(&self, q: usize, w: &[usize]) -> Result<Vec<(usize, bool)>> {
        check_word(&self.alphabet, w)?;
        let n = self.states.len();
        // 0 = unreached, 1 = reached without a final visit, 2 = with one
        let mut cur = vec![0u8; n];
        cur[q] = 1;
        for &a in w {
            let mut next = vec![0u8; n];
            for (s, &mark) in cur.iter().enumerate() {
                if mark == 0 {
                    continue;
                }
                for &p in &self.succ[s][a] {
                    let m = if mark == 2 || self.finals[s] || self.finals[p] {
                        2
                    } else {
                        1
                    };
                    next[p] = next[p].max(m);
                }
            }
            cur = next;
        }
        Ok(cur
            .iter()
            .enumerate()
            .filter(|(_, &m)| m > 0)
            .map(|(p, &m)| (p, m == 2))
            .collect())
    }

    /// Whether `stem · period^ω` has an accepting run.
    ///
    /// Searches the product of the automaton with the positions of the period
    /// for a final node that is reachable and lies on a cycle.
    pub fn accepts_up(&self, w: &UpWord) -> Result<bool> {
        check_word(&self.alphabet, &w.stem)?;
        check_word(&self.alphabet, &w.period)?;
        let n = self.states.len();
        let k = w.period.len();
        let mut start = vec![false; n];
        start[self.initial] = true;
        for &a in &w.stem {
            let mut next = vec![false; n];
            for s in (0..n).filter(|&s| start[s]) {
                for &p in &self.succ[s][a] {
                    next[p] = true;
                }
            }
            start = next;
        }
        let node = |q: usize, pos: usize| q * k + pos;
        let succ_of = |v: usize| {
            let (q, pos) = (v / k, v % k);
            let a = w.period[pos];
            self.succ[q][a]
                .iter()
                .map(move |&p| node(p, (pos + 1) % k))
        };
        let total = n * k;
        let mut reach = vec![false; total];
        let mut queue: VecDeque<usize> = (0..n)
            .filter(|&q| start[q])
            .map(|q| node(q, 0))
            .collect();
        for &v in &queue {
            reach[v] = true;
        }
        while let Some(v) = queue.pop_front() {
            for u in succ_of(v) {
                if !reach[u] {
                    reach[u] = true;
                    queue.push_back(u);
                }
            }
        }
        for v in (0..total).filter(|&v| reach[v] && self.finals[v / k]) {
            let mut seen = vec![false; total];
            let mut queue: VecDeque<usize> = succ_of(v).collect();
            while let Some(u) = queue.pop_front() {
                if u == v {
                    return Ok(true);
                }
                if !seen[u] {
                    seen[u] = true;
                    queue.extend(succ_of(u));
                }
            }
        }
        Ok(false)
    }

    /// Restriction to the states reachable from the initial state.
    pub fn prune_unreachable(&self) -> Nba {
        let n = self.states.len();
        let mut seen = vec![false; n];
        seen[self.initial] = true;
        let mut stack = vec![self.initial];
        while let Some(q) = stack.pop() {
            for row in &self.succ[q] {
                for &p in row {
                    if !seen[p] {
                        seen[p] = true;
                        stack.push(p);
                    }
                }
            }
        }
        let mut map = vec![usize::MAX; n];
        let mut states = Vec::new();
        let mut finals = Vec::new();
        for q in (0..n).filter(|&q| seen[q]) {
            map[q] = states.len();
            states.push(self.states[q].clone());
            finals.push(self.finals[q]);
        }
        let transitions: Vec<_> = self
            .transitions()
            .filter(|&(q, _, _)| seen[q])
            .map(|(q, a, p)| (map[q], a, map[p]))
            .collect();
        Nba::new(
            states,
            self.alphabet.clone(),
            map[self.initial],
            finals,
            transitions,
        )
        .expect("pruning preserves well-formedness")
    }
}

/// Deterministic parity automaton; a run is accepting when the highest
/// priority seen infinitely often is even.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dpa {
    states: Vec<String>,
    alphabet: Vec<String>,
    initial: usize,
    delta: Vec<Vec<usize>>,
    priority: Vec<u32>,
}

impl Dpa {
    pub fn new(
        states: Vec<String>,
        alphabet: Vec<String>,
        initial: usize,
        delta: Vec<Vec<usize>>,
        priority: Vec<u32>,
    ) -> Result<Self> {
        let n = states.len();
        if initial >= n {
            return Err(Error::InvalidAutomaton("initial state out of range".into()));
        }
        if delta.len() != n || priority.len() != n {
            return Err(Error::InvalidAutomaton(
                "transition table or priorities do not match the state count".into(),
            ));
        }
        for (q, row) in delta.iter().enumerate() {
            if row.len() != alphabet.len() {
                return Err(Error::InvalidAutomaton(format!(
                    "state {} has {} successors, expected one per letter",
                    states[q],
                    row.len()
                )));
            }
            if row.iter().any(|&p| p >= n) {
                return Err(Error::InvalidAutomaton(format!(
                    "state {} has a successor out of range",
                    states[q]
                )));
            }
        }
        Ok(Dpa {
            states,
            alphabet,
            initial,
            delta,
            priority,
        })
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn state_names(&self) -> &[String] {
        &self.states
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn next(&self, q: usize, a: usize) -> usize {
        self.delta[q][a]
    }

    pub fn priority(&self, q: usize) -> u32 {
        self.priority[q]
    }

    pub fn priorities(&self) -> &[u32] {
        &self.priority
    }

    pub fn max_priority(&self) -> u32 {
        self.priority.iter().copied().max().unwrap_or(0)
    }

    pub fn letter_index(&self, name: &str) -> Option<usize> {
        self.alphabet.iter().position(|a| a == name)
    }

    /// Endpoint of `w` from `q` and the highest priority among all visited
    /// states, both endpoints included. The empty word gives `(q, Ω(q))`.
    pub fn step(&self, q: usize, w: &[usize]) -> Result<(usize, u32)> {
        check_word(&self.alphabet, w)?;
        let mut cur = q;
        let mut top = self.priority[q];
        for &a in w {
            cur = self.delta[cur][a];
            top = top.max(self.priority[cur]);
        }
        Ok((cur, top))
    }

    /// Whether the unique run on `stem · period^ω` is accepting.
    pub fn accepts_up(&self, w: &UpWord) -> Result<bool> {
        check_word(&self.alphabet, &w.period)?;
        let (mut cur, _) = self.step(self.initial, &w.stem)?;
        // state at the start of each period traversal, until one repeats
        let mut first_seen: BTreeMap<usize, usize> = BTreeMap::new();
        let mut tops = Vec::new();
        loop {
            if let Some(&k) = first_seen.get(&cur) {
                let top = tops[k..].iter().copied().max().unwrap_or(0);
                return Ok(top % 2 == 0);
            }
            first_seen.insert(cur, tops.len());
            let (next, top) = self.step(cur, &w.period)?;
            tops.push(top);
            cur = next;
            debug_assert!(tops.len() <= self.states.len());
        }
    }
}
