//! Positive Boolean formulas in conjunctive normal form.
//!
//! A [`Cnf`] is kept canonical: atoms inside a clause are sorted and unique,
//! no clause contains another, and the clauses are sorted. For negation-free
//! formulas this representative is unique, so `==` decides equivalence.
//! `TRUE` has no clauses; `FALSE` is the single empty clause.

use std::fmt;

use serde::{Deserialize, Serialize};

/// `(q, i)`: DPA state `q` reached with highest priority `i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Atom {
    pub state: u32,
    pub prio: u32,
}

/// `(q, i, Y)`: as [`Atom`], with the nonterminal `Y` the play continues from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ExtAtom {
    pub state: u32,
    pub prio: u32,
    pub nt: u32,
}

impl Atom {
    pub fn new(state: usize, prio: u32) -> Self {
        Atom {
            state: state as u32,
            prio,
        }
    }

    pub fn with_nonterminal(self, nt: usize) -> ExtAtom {
        ExtAtom {
            state: self.state,
            prio: self.prio,
            nt: nt as u32,
        }
    }
}

impl ExtAtom {
    pub fn plain(self) -> Atom {
        Atom {
            state: self.state,
            prio: self.prio,
        }
    }
}

/// `(p, i) ; (p', i') = (p', max(i, i'))`
pub fn atom_compose(x: Atom, y: Atom) -> Atom {
    Atom {
        state: y.state,
        prio: x.prio.max(y.prio),
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.state, self.prio)
    }
}

impl fmt::Display for ExtAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.state, self.prio, self.nt)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cnf<A> {
    clauses: Vec<Vec<A>>,
}

/// Formulas over plain atoms.
pub type Formula = Cnf<Atom>;
/// Formulas over extended atoms.
pub type ExtFormula = Cnf<ExtAtom>;

fn is_subset<A: Ord>(small: &[A], big: &[A]) -> bool {
    if small.len() > big.len() {
        return false;
    }
    let mut it = big.iter();
    'outer: for x in small {
        for y in it.by_ref() {
            match y.cmp(x) {
                std::cmp::Ordering::Less => continue,
                std::cmp::Ordering::Equal => continue 'outer,
                std::cmp::Ordering::Greater => return false,
            }
        }
        return false;
    }
    true
}

fn sorted_union<A: Ord + Clone>(a: &[A], b: &[A]) -> Vec<A> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i].clone());
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j].clone());
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                out.push(a[i].clone());
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

impl<A: Ord + Clone> Cnf<A> {
    pub fn tt() -> Self {
        Cnf { clauses: Vec::new() }
    }

    pub fn ff() -> Self {
        Cnf {
            clauses: vec![Vec::new()],
        }
    }

    pub fn atom(a: A) -> Self {
        Cnf {
            clauses: vec![vec![a]],
        }
    }

    /// Canonical formula of the given clause sets.
    pub fn from_clauses<I, C>(clauses: I) -> Self
    where
        I: IntoIterator<Item = C>,
        C: IntoIterator<Item = A>,
    {
        let clauses = clauses
            .into_iter()
            .map(|c| {
                let mut c: Vec<A> = c.into_iter().collect();
                c.sort();
                c.dedup();
                c
            })
            .collect();
        Self::canonical(clauses)
    }

    /// Keeps the clauses as given (atoms sorted, duplicates dropped), including
    /// subsumed ones. The result is equivalent to, but may differ from, the
    /// canonical form; only useful to test representative independence.
    pub fn from_clauses_raw(clauses: Vec<Vec<A>>) -> Self {
        let mut clauses: Vec<Vec<A>> = clauses
            .into_iter()
            .map(|mut c| {
                c.sort();
                c.dedup();
                c
            })
            .collect();
        clauses.sort();
        clauses.dedup();
        Cnf { clauses }
    }

    fn canonical(mut clauses: Vec<Vec<A>>) -> Self {
        clauses.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        clauses.dedup();
        let mut kept: Vec<Vec<A>> = Vec::with_capacity(clauses.len());
        for c in clauses {
            if c.is_empty() {
                return Self::ff();
            }
            if !kept.iter().any(|k| is_subset(k, &c)) {
                kept.push(c);
            }
        }
        kept.sort();
        Cnf { clauses: kept }
    }

    pub fn clauses(&self) -> &[Vec<A>] {
        &self.clauses
    }

    pub fn is_true(&self) -> bool {
        self.clauses.is_empty()
    }

    pub fn is_false(&self) -> bool {
        self.clauses.iter().any(|c| c.is_empty())
    }

    /// Sorted list of the atoms that occur.
    pub fn atoms(&self) -> Vec<A> {
        let mut all: Vec<A> = self.clauses.iter().flatten().cloned().collect();
        all.sort();
        all.dedup();
        all
    }

    pub fn conj(&self, other: &Self) -> Self {
        if self.is_true() {
            return other.clone();
        }
        if other.is_true() {
            return self.clone();
        }
        let mut all = self.clauses.clone();
        all.extend(other.clauses.iter().cloned());
        Self::canonical(all)
    }

    pub fn disj(&self, other: &Self) -> Self {
        if self.is_false() {
            return other.clone();
        }
        if other.is_false() {
            return self.clone();
        }
        let mut all = Vec::with_capacity(self.clauses.len() * other.clauses.len());
        for k in &self.clauses {
            for h in &other.clauses {
                all.push(sorted_union(k, h));
            }
        }
        Self::canonical(all)
    }

    /// Whether `self` entails `other`: every clause of `other` contains a
    /// clause of `self`.
    pub fn implies(&self, other: &Self) -> bool {
        other
            .clauses
            .iter()
            .all(|h| self.clauses.iter().any(|k| is_subset(k, h)))
    }

    /// Truth value under an assignment of the atoms.
    pub fn eval(&self, assign: impl Fn(&A) -> bool) -> bool {
        self.clauses.iter().all(|c| c.iter().any(&assign))
    }

    /// Applies `f` to every atom and re-canonicalizes.
    pub fn map_atoms<B: Ord + Clone>(&self, f: impl Fn(&A) -> B) -> Cnf<B> {
        Cnf::from_clauses(self.clauses.iter().map(|c| c.iter().map(&f).collect::<Vec<_>>()))
    }

    /// All choice functions, as the chosen atom of each clause in clause order.
    /// `TRUE` has exactly one (empty) choice function, `FALSE` none.
    pub fn choice_functions(&self) -> ChoiceFunctions<'_, A> {
        let done = self.clauses.iter().any(|c| c.is_empty());
        ChoiceFunctions {
            clauses: &self.clauses,
            odometer: vec![0; self.clauses.len()],
            done,
        }
    }

    /// Text form such as `((q0,1) | (q1,2)) & ((q0,0))`; `true` and `false`
    /// for the constants.
    pub fn render(&self, atom: impl Fn(&A) -> String) -> String {
        if self.is_true() {
            return "true".into();
        }
        if self.is_false() {
            return "false".into();
        }
        self.clauses
            .iter()
            .map(|c| {
                let parts: Vec<String> = c.iter().map(&atom).collect();
                format!("({})", parts.join(" | "))
            })
            .collect::<Vec<_>>()
            .join(" & ")
    }
}

impl<A: Ord + Clone + fmt::Display> fmt::Display for Cnf<A> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render(|a| a.to_string()))
    }
}

/// Iterator over the choice functions of a formula.
pub struct ChoiceFunctions<'a, A> {
    clauses: &'a [Vec<A>],
    odometer: Vec<usize>,
    done: bool,
}

impl<A: Clone> Iterator for ChoiceFunctions<'_, A> {
    type Item = Vec<A>;

    fn next(&mut self) -> Option<Vec<A>> {
        if self.done {
            return None;
        }
        let out = self
            .odometer
            .iter()
            .zip(self.clauses)
            .map(|(&i, c)| c[i].clone())
            .collect();
        self.done = true;
        for (slot, c) in self.odometer.iter_mut().zip(self.clauses) {
            *slot += 1;
            if *slot < c.len() {
                self.done = false;
                break;
            }
            *slot = 0;
        }
        Some(out)
    }
}

impl Formula {
    /// `(p, j) ; G`: every atom's priority raised to at least `j`.
    pub fn shift(&self, j: u32) -> Formula {
        if j == 0 {
            return self.clone();
        }
        self.map_atoms(|a| Atom {
            state: a.state,
            prio: a.prio.max(j),
        })
    }

    /// `F : (G_q)_q`: each atom `(p, j)` of `F` replaced by `(p, j) ; G_p`.
    pub fn compose_family<'f>(&self, fam: impl Fn(usize) -> &'f Formula) -> Formula {
        let mut out = Formula::tt();
        for clause in &self.clauses {
            let mut part = Formula::ff();
            for a in clause {
                part = part.disj(&fam(a.state as usize).shift(a.prio));
                if part.is_true() {
                    break;
                }
            }
            out = out.conj(&part);
            if out.is_false() {
                break;
            }
        }
        out
    }

    /// `F.Y`: every atom tagged with the nonterminal `y`.
    pub fn attach_nonterminal(&self, y: usize) -> ExtFormula {
        Cnf {
            clauses: self
                .clauses
                .iter()
                .map(|c| c.iter().map(|a| a.with_nonterminal(y)).collect())
                .collect(),
        }
    }
}
