//! Inclusion checking and game solving for ω-context-free grammars against
//! Büchi automata.
//!
//! The inclusion side summarizes finite derivations by boxes of the
//! automaton's transition monoid ([`boxes`], [`lvp`]). The game side
//! determinizes the automaton ([`determinize`]), summarizes derivations by
//! positive Boolean formulas ([`formulas`], [`lsp`]), solves the induced
//! parity game ([`paritygame`]) and turns the winning strategy back into a
//! grammar-game strategy ([`strategy`]).

pub mod automata;
pub mod boxes;
pub mod determinize;
pub mod error;
pub mod examples;
pub mod formulas;
pub mod grammar;
pub mod lsp;
pub mod lvp;
pub mod paritygame;
pub mod strategy;
pub mod text;

pub use error::{Error, Result};
