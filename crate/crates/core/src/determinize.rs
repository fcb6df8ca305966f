//! Büchi to parity determinization with compactly named Safra trees.
//!
//! Each tree node carries a name and a set of automaton states. Per letter
//! the tree spawns children for final states, moves every label along the
//! letter, merges horizontally (older siblings keep shared states) and
//! vertically (a node covered by its children turns green and loses them),
//! and drops empty nodes. The smallest name that was removed or turned green
//! decides the transition priority; names are then compacted by rank.
//! A vanished name outranks a green one of the same value, since the node
//! that carries it next is a different one.
//!
//! That min-parity transition priority is flipped into max-even form and
//! moved onto the target state, so a DPA state is a tree plus the priority of
//! the transition that entered it.

use std::collections::{HashMap, VecDeque};

use crate::automata::{Dpa, Nba};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Node {
    name: u32,
    label: u64,
    children: Vec<Node>,
}

fn bits(mut w: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if w == 0 {
            None
        } else {
            let i = w.trailing_zeros() as usize;
            w &= w - 1;
            Some(i)
        }
    })
}

impl Node {
    fn max_name(&self) -> u32 {
        self.children
            .iter()
            .map(Node::max_name)
            .fold(self.name, u32::max)
    }

    fn spawn(&mut self, finals: u64, next: &mut u32) {
        for c in &mut self.children {
            c.spawn(finals, next);
        }
        if self.label & finals != 0 {
            *next += 1;
            self.children.push(Node {
                name: *next,
                label: self.label & finals,
                children: Vec::new(),
            });
        }
    }

    fn advance(&mut self, succ: &[u64]) {
        self.label = bits(self.label).fold(0, |acc, q| acc | succ[q]);
        for c in &mut self.children {
            c.advance(succ);
        }
    }

    fn remove(&mut self, mask: u64) {
        self.label &= !mask;
        for c in &mut self.children {
            c.remove(mask);
        }
    }

    fn merge_horizontal(&mut self) {
        let mut seen = 0u64;
        for c in &mut self.children {
            c.remove(seen);
            seen |= c.label;
        }
        for c in &mut self.children {
            c.merge_horizontal();
        }
    }

    fn drop_empty(&mut self, bad: &mut u32) {
        self.children.retain(|c| {
            if c.label == 0 {
                *bad = (*bad).min(c.name);
            }
            c.label != 0
        });
        for c in &mut self.children {
            c.drop_empty(bad);
        }
    }

    fn merge_vertical(&mut self, bad: &mut u32, green: &mut u32) {
        let union = self.children.iter().fold(0, |acc, c| acc | c.label);
        if !self.children.is_empty() && union == self.label {
            *green = (*green).min(self.name);
            for c in &self.children {
                *bad = (*bad).min(c.name);
            }
            self.children.clear();
        } else {
            for c in &mut self.children {
                c.merge_vertical(bad, green);
            }
        }
    }

    fn names(&self, out: &mut Vec<u32>) {
        out.push(self.name);
        for c in &self.children {
            c.names(out);
        }
    }

    fn rename(&mut self, rank: &HashMap<u32, u32>) {
        self.name = rank[&self.name];
        for c in &mut self.children {
            c.rename(rank);
        }
    }

    fn render(&self, states: &[String], out: &mut String) {
        let label: Vec<&str> = bits(self.label).map(|q| states[q].as_str()).collect();
        out.push_str(&format!("{}:{{{}}}", self.name, label.join(",")));
        if !self.children.is_empty() {
            out.push('[');
            for (i, c) in self.children.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                c.render(states, out);
            }
            out.push(']');
        }
    }
}

/// One Safra step. Returns the successor tree (`None` when empty) and the
/// min-parity priority of the step, in `[1, 2n+1]`: `2i` when the smallest
/// event is node `i` turning green, `2i-1` when it is node `i` vanishing.
fn step(tree: &Node, succ: &[u64], finals: u64, n: u32) -> (Option<Node>, u32) {
    let mut t = tree.clone();
    let mut next = t.max_name();
    t.spawn(finals, &mut next);
    t.advance(succ);
    t.merge_horizontal();
    let mut bad = u32::MAX;
    let mut green = u32::MAX;
    if t.label == 0 {
        return (None, (2 * t.name - 1).min(2 * n + 1));
    }
    t.drop_empty(&mut bad);
    t.merge_vertical(&mut bad, &mut green);
    let mut prio = 2 * n + 1;
    if bad != u32::MAX {
        prio = prio.min(2 * bad - 1);
    }
    if green != u32::MAX {
        prio = prio.min(2 * green);
    }
    let mut names = Vec::new();
    t.names(&mut names);
    names.sort_unstable();
    let rank: HashMap<u32, u32> = names
        .iter()
        .enumerate()
        .map(|(i, &nm)| (nm, i as u32 + 1))
        .collect();
    t.rename(&rank);
    (Some(t), prio)
}

#[derive(Clone, Copy, Debug)]
pub struct DeterminizeOptions {
    /// Largest number of DPA states built before giving up.
    pub state_cap: usize,
}

impl Default for DeterminizeOptions {
    fn default() -> Self {
        DeterminizeOptions { state_cap: 200_000 }
    }
}

#[derive(Clone, Debug)]
pub struct DeterminizationReport {
    pub dpa: Dpa,
    pub state_count: usize,
    pub max_priority: u32,
    /// Distinct Safra trees met, the empty tree included.
    pub tree_count: usize,
    /// NBA states left after pruning unreachable ones.
    pub nba_states: usize,
    /// Tree and entering priority of every DPA state, for debugging.
    pub state_dump: Vec<String>,
}

/// Determinizes with the default options.
pub fn determinize(a: &Nba) -> Result<DeterminizationReport> {
    determinize_with(a, DeterminizeOptions::default())
}

pub fn determinize_with(a: &Nba, opts: DeterminizeOptions) -> Result<DeterminizationReport> {
    if a.alphabet().is_empty() {
        return Err(Error::EmptyAlphabet);
    }
    let a = a.prune_unreachable();
    let n = a.num_states();
    if n > 64 {
        return Err(Error::TooManyStates(n));
    }
    let k = a.alphabet().len();
    let succ: Vec<Vec<u64>> = (0..k)
        .map(|c| {
            (0..n)
                .map(|q| a.successors(q, c).iter().fold(0u64, |m, &p| m | 1 << p))
                .collect()
        })
        .collect();
    let finals = (0..n)
        .filter(|&q| a.is_final(q))
        .fold(0u64, |m, q| m | 1 << q);
    let n32 = n as u32;
    let flip = |p: u32| 2 * n32 + 2 - p;

    let init = Some(Node {
        name: 1,
        label: 1 << a.initial(),
        children: Vec::new(),
    });
    type Key = (Option<Node>, u32);
    let mut index: HashMap<Key, usize> = HashMap::new();
    let mut keys: Vec<Key> = Vec::new();
    let mut trees: HashMap<Option<Node>, Vec<(Option<Node>, u32)>> = HashMap::new();
    let mut delta: Vec<Vec<usize>> = Vec::new();
    let mut queue = VecDeque::new();

    let start: Key = (init, 0);
    index.insert(start.clone(), 0);
    keys.push(start);
    queue.push_back(0);
    while let Some(id) = queue.pop_front() {
        let tree = keys[id].0.clone();
        let moves = trees
            .entry(tree.clone())
            .or_insert_with(|| {
                (0..k)
                    .map(|c| match &tree {
                        Some(t) => {
                            let (t2, p) = step(t, &succ[c], finals, n32);
                            (t2, flip(p))
                        }
                        None => (None, flip(2 * n32 + 1)),
                    })
                    .collect()
            })
            .clone();
        let mut row = Vec::with_capacity(k);
        for key in moves {
            let next = match index.get(&key) {
                Some(&j) => j,
                None => {
                    let j = keys.len();
                    if j >= opts.state_cap {
                        return Err(Error::ResourceLimit {
                            what: "DPA states",
                            limit: opts.state_cap,
                        });
                    }
                    index.insert(key.clone(), j);
                    keys.push(key);
                    queue.push_back(j);
                    j
                }
            };
            row.push(next);
        }
        delta.push(row);
    }

    let priority: Vec<u32> = keys.iter().map(|(_, p)| *p).collect();
    let state_dump = keys
        .iter()
        .map(|(t, p)| {
            let mut s = String::new();
            match t {
                Some(t) => t.render(a.state_names(), &mut s),
                None => s.push_str("empty"),
            }
            format!("{s} prio {p}")
        })
        .collect();
    let names = (0..keys.len()).map(|i| format!("d{i}")).collect();
    let dpa = Dpa::new(names, a.alphabet().to_vec(), 0, delta, priority)?;
    Ok(DeterminizationReport {
        state_count: dpa.num_states(),
        max_priority: dpa.max_priority(),
        tree_count: trees.len(),
        nba_states: n,
        state_dump,
        dpa,
    })
}
