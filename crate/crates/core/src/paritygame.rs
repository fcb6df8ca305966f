//! Finite parity games under max-even acceptance, solved by Zielonka's
//! recursive algorithm.
//!
//! Prover wins a play when the highest priority seen infinitely often is
//! even. Strategies are positional; among equally good successors the one
//! with the lowest vertex id is taken.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grammar::Owner;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParityGame {
    owner: Vec<Owner>,
    prio: Vec<u32>,
    succ: Vec<Vec<usize>>,
    pred: Vec<Vec<usize>>,
}

impl ParityGame {
    /// Checks edge targets and that every vertex has a successor.
    pub fn new(owner: Vec<Owner>, prio: Vec<u32>, mut succ: Vec<Vec<usize>>) -> Result<Self> {
        let n = owner.len();
        if prio.len() != n || succ.len() != n {
            return Err(Error::Invariant(
                "parity game tables have different lengths".into(),
            ));
        }
        let mut pred = vec![Vec::new(); n];
        for (v, s) in succ.iter_mut().enumerate() {
            s.sort_unstable();
            s.dedup();
            if s.is_empty() {
                return Err(Error::Deadlock(v));
            }
            for &w in s.iter() {
                if w >= n {
                    return Err(Error::Invariant(format!("edge {v} -> {w} leaves the game")));
                }
                pred[w].push(v);
            }
        }
        Ok(ParityGame {
            owner,
            prio,
            succ,
            pred,
        })
    }

    pub fn len(&self) -> usize {
        self.owner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.owner.is_empty()
    }

    pub fn owner(&self, v: usize) -> Owner {
        self.owner[v]
    }

    pub fn priority(&self, v: usize) -> u32 {
        self.prio[v]
    }

    pub fn successors(&self, v: usize) -> &[usize] {
        &self.succ[v]
    }

    pub fn edge_count(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }

    /// The same arena with owners swapped and every priority raised by one,
    /// which swaps the winners.
    pub fn dual(&self) -> ParityGame {
        ParityGame {
            owner: self.owner.iter().map(|o| o.opponent()).collect(),
            prio: self.prio.iter().map(|p| p + 1).collect(),
            succ: self.succ.clone(),
            pred: self.pred.clone(),
        }
    }

    /// Text dump: `vertex <id> owner <P|R> prio <i>` lines, then `edge <a> <b>`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for v in 0..self.len() {
            out.push_str(&format!(
                "vertex {v} owner {} prio {}\n",
                owner_tag(self.owner[v]),
                self.prio[v]
            ));
        }
        for (v, s) in self.succ.iter().enumerate() {
            for w in s {
                out.push_str(&format!("edge {v} {w}\n"));
            }
        }
        out
    }

    /// JSON-ready form of the game, with optional vertex labels.
    pub fn dump(&self, labels: Option<&[String]>) -> GameDump {
        GameDump {
            vertices: (0..self.len())
                .map(|v| VertexDump {
                    id: v,
                    owner: owner_tag(self.owner[v]).to_string(),
                    prio: self.prio[v],
                    label: labels.map(|l| l[v].clone()),
                })
                .collect(),
            edges: self
                .succ
                .iter()
                .enumerate()
                .flat_map(|(v, s)| s.iter().map(move |&w| [v, w]))
                .collect(),
        }
    }
}

fn owner_tag(o: Owner) -> &'static str {
    match o {
        Owner::Prover => "P",
        Owner::Refuter => "R",
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexDump {
    pub id: usize,
    pub owner: String,
    pub prio: u32,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub label: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameDump {
    pub vertices: Vec<VertexDump>,
    pub edges: Vec<[usize; 2]>,
}

/// Winning regions and positional winning strategies.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Solution {
    /// Winner of every vertex.
    pub winner: Vec<Owner>,
    /// For each vertex owned by its winner, the successor to move to.
    pub strategy: Vec<Option<usize>>,
}

impl Solution {
    pub fn region(&self, player: Owner) -> Vec<bool> {
        self.winner.iter().map(|&w| w == player).collect()
    }

    /// Strategy of `player` on its own vertices in its region.
    pub fn strategy_of(&self, game: &ParityGame, player: Owner) -> Vec<Option<usize>> {
        (0..self.winner.len())
            .map(|v| {
                if self.winner[v] == player && game.owner(v) == player {
                    self.strategy[v]
                } else {
                    None
                }
            })
            .collect()
    }

    pub fn dump(&self, game: &ParityGame, initial: usize) -> SolutionDump {
        let region = |p: Owner| (0..self.winner.len()).filter(|&v| self.winner[v] == p).collect();
        let table = |p: Owner| {
            self.strategy_of(game, p)
                .iter()
                .enumerate()
                .filter_map(|(v, s)| s.map(|w| (v, w)))
                .collect()
        };
        SolutionDump {
            initial,
            winner: self.winner[initial],
            win_prover: region(Owner::Prover),
            win_refuter: region(Owner::Refuter),
            strat_prover: table(Owner::Prover),
            strat_refuter: table(Owner::Refuter),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolutionDump {
    pub initial: usize,
    pub winner: Owner,
    pub win_prover: Vec<usize>,
    pub win_refuter: Vec<usize>,
    pub strat_prover: BTreeMap<usize, usize>,
    pub strat_refuter: BTreeMap<usize, usize>,
}

fn player_of(prio: u32) -> Owner {
    if prio % 2 == 0 {
        Owner::Prover
    } else {
        Owner::Refuter
    }
}

struct Zielonka<'g> {
    g: &'g ParityGame,
    strategy: Vec<Option<usize>>,
}

impl Zielonka<'_> {
    /// Attractor of `target` for `player` inside `active`; records attracting
    /// moves in `self.strategy`.
    fn attractor(&mut self, active: &[bool], target: &[bool], player: Owner) -> Vec<bool> {
        let g = self.g;
        let n = g.len();
        let mut attr = target.to_vec();
        let mut rank = vec![usize::MAX; n];
        let mut left: Vec<usize> = (0..n)
            .map(|v| g.succ[v].iter().filter(|&&w| active[w]).count())
            .collect();
        let mut queue = VecDeque::new();
        for v in (0..n).filter(|&v| target[v]) {
            rank[v] = 0;
            queue.push_back(v);
        }
        while let Some(v) = queue.pop_front() {
            for &u in &g.pred[v] {
                if !active[u] || attr[u] {
                    continue;
                }
                let take = if g.owner[u] == player {
                    true
                } else {
                    left[u] -= 1;
                    left[u] == 0
                };
                if take {
                    attr[u] = true;
                    rank[u] = rank[v] + 1;
                    if g.owner[u] == player {
                        self.strategy[u] = g.succ[u]
                            .iter()
                            .copied()
                            .find(|&w| active[w] && attr[w] && rank[w] < rank[u]);
                    }
                    queue.push_back(u);
                }
            }
        }
        attr
    }

    /// Winner of every active vertex.
    fn solve(&mut self, active: &[bool], winner: &mut [Owner]) {
        let g = self.g;
        let Some(d) = (0..g.len())
            .filter(|&v| active[v])
            .map(|v| g.prio[v])
            .max()
        else {
            return;
        };
        let p = player_of(d);
        let top: Vec<bool> = (0..g.len()).map(|v| active[v] && g.prio[v] == d).collect();
        let attr = self.attractor(active, &top, p);
        for v in (0..g.len()).filter(|&v| top[v] && g.owner[v] == p) {
            self.strategy[v] = g.succ[v].iter().copied().find(|&w| active[w]);
        }
        let rest: Vec<bool> = (0..g.len()).map(|v| active[v] && !attr[v]).collect();
        self.solve(&rest, winner);
        let lost: Vec<bool> = (0..g.len())
            .map(|v| rest[v] && winner[v] == p.opponent())
            .collect();
        if !lost.iter().any(|&b| b) {
            for v in (0..g.len()).filter(|&v| attr[v]) {
                winner[v] = p;
            }
            return;
        }
        let b = self.attractor(active, &lost, p.opponent());
        for v in (0..g.len()).filter(|&v| b[v]) {
            winner[v] = p.opponent();
        }
        let rest2: Vec<bool> = (0..g.len()).map(|v| active[v] && !b[v]).collect();
        self.solve(&rest2, winner);
    }
}

/// Winning regions and strategies of both players.
pub fn solve(g: &ParityGame) -> Solution {
    let n = g.len();
    let mut z = Zielonka {
        g,
        strategy: vec![None; n],
    };
    let mut winner = vec![Owner::Prover; n];
    z.solve(&vec![true; n], &mut winner);
    let strategy = (0..n)
        .map(|v| {
            if g.owner[v] == winner[v] {
                z.strategy[v]
            } else {
                None
            }
        })
        .collect();
    Solution { winner, strategy }
}

/// Whether `strategy` wins for `player` from every vertex of `region`: in the
/// graph where `player`'s vertices follow the strategy, no cycle reachable
/// from the region has a maximum priority of the opponent's parity.
pub fn verify_strategy(
    g: &ParityGame,
    player: Owner,
    strategy: &[Option<usize>],
    region: &[bool],
) -> bool {
    let n = g.len();
    let mut edges: Vec<Vec<usize>> = Vec::with_capacity(n);
    for v in 0..n {
        if g.owner[v] == player && region[v] {
            match strategy[v] {
                Some(w) if g.succ[v].contains(&w) => edges.push(vec![w]),
                _ => return false,
            }
        } else {
            edges.push(g.succ[v].clone());
        }
    }
    let mut reach = region.to_vec();
    let mut stack: Vec<usize> = (0..n).filter(|&v| region[v]).collect();
    while let Some(v) = stack.pop() {
        for &w in &edges[v] {
            if !reach[w] {
                reach[w] = true;
                stack.push(w);
            }
        }
    }
    let bad_parity = match player {
        Owner::Prover => 1,
        Owner::Refuter => 0,
    };
    let mut prios: Vec<u32> = (0..n)
        .filter(|&v| reach[v])
        .map(|v| g.prio[v])
        .filter(|p| p % 2 == bad_parity)
        .collect();
    prios.sort_unstable();
    prios.dedup();
    for d in prios {
        let keep: Vec<bool> = (0..n).map(|v| reach[v] && g.prio[v] <= d).collect();
        let comp = scc(n, &edges, &keep);
        for v in (0..n).filter(|&v| keep[v] && g.prio[v] == d) {
            let on_cycle = edges[v].iter().any(|&w| keep[w] && comp[w] == comp[v]);
            if on_cycle {
                return false;
            }
        }
    }
    true
}

/// Tarjan's algorithm on the subgraph induced by `keep`; vertices outside
/// get `usize::MAX`.
fn scc(n: usize, edges: &[Vec<usize>], keep: &[bool]) -> Vec<usize> {
    const UNSEEN: usize = usize::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0; n];
    let mut comp = vec![UNSEEN; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut next_index = 0;
    let mut next_comp = 0;
    for root in (0..n).filter(|&v| keep[v]) {
        if index[root] != UNSEEN {
            continue;
        }
        let mut frames: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut pos)) = frames.last_mut() {
            if *pos < edges[v].len() {
                let w = edges[v][*pos];
                *pos += 1;
                if !keep[w] {
                    continue;
                }
                if index[w] == UNSEEN {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    frames.push((w, 0));
                } else if on_stack[w] {
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
                    let w = stack.pop().expect("on stack");
                    on_stack[w] = false;
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
