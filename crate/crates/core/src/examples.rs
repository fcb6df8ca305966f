//! The request/acknowledge running example as ready-made values.

use crate::automata::Nba;
use crate::grammar::{Grammar, Rule, Symbol};

/// `X -> req Y ack | X X`, `Y -> s Y t | ε`, start `X`, without ownership.
pub fn g_ex() -> Grammar {
    let (x, y) = (Symbol::Nonterminal(0), Symbol::Nonterminal(1));
    let t = Symbol::Terminal;
    Grammar::new(
        vec!["X".into(), "Y".into()],
        ["req", "ack", "s", "t"].map(String::from).to_vec(),
        vec![
            Rule::new(0, vec![t(0), y, t(1)]),
            Rule::new(0, vec![x, x]),
            Rule::new(1, vec![t(2), y, t(3)]),
            Rule::new(1, vec![]),
        ],
        0,
        None,
    )
}

/// Büchi automaton accepting the words in which every `req` is eventually
/// followed by an `ack`: `q0` (initial, final) waits, `q1` has a pending request.
pub fn a_ex() -> Nba {
    let (req, ack, s, t) = (0, 1, 2, 3);
    Nba::new(
        vec!["q0".into(), "q1".into()],
        ["req", "ack", "s", "t"].map(String::from).to_vec(),
        0,
        vec![true, false],
        vec![
            (0, req, 1),
            (0, ack, 0),
            (0, s, 0),
            (0, t, 0),
            (1, req, 1),
            (1, s, 1),
            (1, t, 1),
            (1, ack, 0),
        ],
    )
    .expect("well-formed")
}
