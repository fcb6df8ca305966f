//! Boxes: elements of the transition monoid of a Büchi automaton.
//!
//! A box relates source states to target states, each related pair carrying a
//! flag telling whether a final state can be visited on the way. Rows are
//! stored as bitsets, so automata with more than 64 states are rejected.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use crate::automata::Nba;
use crate::error::{Error, Result};

/// Nonempty-word relation: `reach[q]` holds the targets of `q`, `fin[q]` the
/// targets reachable with a final visit. `fin[q] ⊆ reach[q]` always.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Relation {
    reach: Vec<u64>,
    fin: Vec<u64>,
}

/// A box: either the identity (the box of the empty word only) or a relation.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TransitionBox {
    Id,
    Rel(Relation),
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

fn check_size(n: usize) -> Result<()> {
    if n > 64 {
        Err(Error::TooManyStates(n))
    } else {
        Ok(())
    }
}

impl Relation {
    /// Builds a relation over `n` states from `(q, q', flag)` triples. A pair
    /// listed with both flags keeps flag 1.
    pub fn from_triples(n: usize, triples: &[(usize, usize, bool)]) -> Self {
        let mut reach = vec![0u64; n];
        let mut fin = vec![0u64; n];
        for &(q, p, f) in triples {
            reach[q] |= 1 << p;
            if f {
                fin[q] |= 1 << p;
            }
        }
        Relation { reach, fin }
    }

    pub fn num_states(&self) -> usize {
        self.reach.len()
    }

    pub fn targets(&self, q: usize) -> u64 {
        self.reach[q]
    }

    pub fn final_targets(&self, q: usize) -> u64 {
        self.fin[q]
    }

    /// The triples `(q, q', flag)`, sorted.
    pub fn triples(&self) -> Vec<(usize, usize, bool)> {
        (0..self.reach.len())
            .flat_map(|q| bits(self.reach[q]).map(move |p| (q, p, self.fin[q] >> p & 1 == 1)))
            .collect()
    }

    fn compose(&self, t: &Relation) -> Relation {
        let n = self.reach.len();
        let mut reach = vec![0u64; n];
        let mut fin = vec![0u64; n];
        for q in 0..n {
            let (mut r, mut f) = (0u64, 0u64);
            for mid in bits(self.reach[q]) {
                r |= t.reach[mid];
                f |= if self.fin[q] >> mid & 1 == 1 {
                    t.reach[mid]
                } else {
                    t.fin[mid]
                };
            }
            reach[q] = r;
            fin[q] = f;
        }
        Relation { reach, fin }
    }
}

impl TransitionBox {
    /// `self ; t`: first `self`, then `t`.
    pub fn compose(&self, t: &TransitionBox) -> TransitionBox {
        match (self, t) {
            (TransitionBox::Id, x) | (x, TransitionBox::Id) => x.clone(),
            (TransitionBox::Rel(a), TransitionBox::Rel(b)) => TransitionBox::Rel(a.compose(b)),
        }
    }

    pub fn is_id(&self) -> bool {
        matches!(self, TransitionBox::Id)
    }

    pub fn from_triples(n: usize, triples: &[(usize, usize, bool)]) -> Self {
        TransitionBox::Rel(Relation::from_triples(n, triples))
    }

    /// Text matrix, one row per source state: `.` marks a flagged pair, `o`
    /// an unflagged one and `-` no pair.
    pub fn render(&self, state_names: &[String]) -> String {
        match self {
            TransitionBox::Id => "id".to_string(),
            TransitionBox::Rel(r) => {
                let width = state_names.iter().map(|s| s.len()).max().unwrap_or(0);
                let mut out = String::new();
                for q in 0..r.num_states() {
                    let name = state_names.get(q).map(String::as_str).unwrap_or("?");
                    out.push_str(&format!("{name:>width$} |"));
                    for p in 0..r.num_states() {
                        let c = if r.fin[q] >> p & 1 == 1 {
                            '.'
                        } else if r.reach[q] >> p & 1 == 1 {
                            'o'
                        } else {
                            '-'
                        };
                        out.push(' ');
                        out.push(c);
                    }
                    out.push('\n');
                }
                out
            }
        }
    }
}

impl fmt::Display for TransitionBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransitionBox::Id => write!(f, "id"),
            TransitionBox::Rel(r) => {
                let parts: Vec<String> = r
                    .triples()
                    .into_iter()
                    .map(|(q, p, x)| format!("({q},{p},{})", x as u8))
                    .collect();
                write!(f, "{{{}}}", parts.join(","))
            }
        }
    }
}

/// Box of the single letter `c`: `(q, q', 1)` for every `c`-edge where `q` or
/// `q'` is final, `(q, q', 0)` for the others.
pub fn letter_box(a: &Nba, c: usize) -> Result<TransitionBox> {
    check_size(a.num_states())?;
    if c >= a.alphabet().len() {
        return Err(Error::UnknownLetter(format!("#{c}")));
    }
    let n = a.num_states();
    let mut reach = vec![0u64; n];
    let mut fin = vec![0u64; n];
    for q in 0..n {
        for &p in a.successors(q, c) {
            reach[q] |= 1 << p;
            if a.is_final(q) || a.is_final(p) {
                fin[q] |= 1 << p;
            }
        }
    }
    Ok(TransitionBox::Rel(Relation { reach, fin }))
}

/// All letter boxes of `a`, indexed by letter.
pub fn letter_boxes(a: &Nba) -> Result<Vec<TransitionBox>> {
    (0..a.alphabet().len()).map(|c| letter_box(a, c)).collect()
}

/// Box of a finite word; the empty word maps to [`TransitionBox::Id`].
pub fn box_of_word(a: &Nba, w: &[usize]) -> Result<TransitionBox> {
    let mut acc = TransitionBox::Id;
    for &c in w {
        acc = acc.compose(&letter_box(a, c)?);
    }
    Ok(acc)
}

/// Every box of the monoid generated by the letter boxes, identity included.
pub fn closed_box_set(a: &Nba) -> Result<BTreeSet<TransitionBox>> {
    let letters = letter_boxes(a)?;
    let mut seen = BTreeSet::new();
    seen.insert(TransitionBox::Id);
    let mut queue = VecDeque::from([TransitionBox::Id]);
    while let Some(b) = queue.pop_front() {
        for l in &letters {
            let next = b.compose(l);
            if seen.insert(next.clone()) {
                queue.push_back(next);
            }
        }
    }
    Ok(seen)
}

/// Whether `(t, r)` is a lasso from `q_init`: `r` is the identity, or some
/// state `t` leads to from `q_init` reaches, in the graph of `r`, a cycle
/// through a flagged pair. The path to the cycle may be empty.
pub fn is_lasso(t: &TransitionBox, r: &TransitionBox, q_init: usize) -> bool {
    let r = match r {
        TransitionBox::Id => return true,
        TransitionBox::Rel(r) => r,
    };
    let n = r.num_states();
    let sources = match t {
        TransitionBox::Id => 1u64 << q_init,
        TransitionBox::Rel(t) => t.reach[q_init],
    };
    let mut reached = sources;
    let mut stack: Vec<usize> = bits(sources).collect();
    while let Some(q) = stack.pop() {
        let new = r.reach[q] & !reached;
        reached |= new;
        stack.extend(bits(new));
    }
    let comp = tarjan(n, |q| r.reach[q]);
    bits(reached).any(|a| bits(r.fin[a]).any(|b| comp[a] == comp[b]))
}

/// Strongly connected component index of every vertex of a graph with at most
/// 64 vertices given by successor bitsets.
fn tarjan(n: usize, succ: impl Fn(usize) -> u64) -> Vec<usize> {
    const UNSEEN: usize = usize::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0; n];
    let mut comp = vec![UNSEEN; n];
    let mut on_stack = 0u64;
    let mut stack = Vec::new();
    let mut next_index = 0;
    let mut next_comp = 0;
    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        // frames: (vertex, successors still to visit)
        let mut frames: Vec<(usize, u64)> = Vec::new();
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack |= 1 << root;
        frames.push((root, succ(root)));
        while let Some(&mut (v, ref mut todo)) = frames.last_mut() {
            if *todo != 0 {
                let w = todo.trailing_zeros() as usize;
                *todo &= *todo - 1;
                if index[w] == UNSEEN {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack |= 1 << w;
                    frames.push((w, succ(w)));
                } else if on_stack >> w & 1 == 1 {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            frames.pop();
            if let Some(&(parent, _)) = frames.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                loop {
                    let w = stack.pop().expect("vertex on stack");
                    on_stack &= !(1 << w);
                    comp[w] = next_comp;
                    if w == v {
                        break;
                    }
                }
                next_comp += 1;
            }
        }
    }
    comp
}
