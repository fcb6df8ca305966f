use thiserror::Error;

use crate::grammar::Violation;

/// Errors raised by parsing, validation and the solver pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid grammar: {}", render_violations(.0))]
    InvalidGrammar(Vec<Violation>),

    #[error("invalid automaton: {0}")]
    InvalidAutomaton(String),

    #[error("letter {0} is not in the alphabet")]
    UnknownLetter(String),

    #[error("terminal `{0}` of the grammar is missing from the automaton alphabet")]
    AlphabetMismatch(String),

    #[error("game grammar requires an owner for every nonterminal")]
    MissingOwnership,

    #[error("grammar union needs at least one (V, U) pair")]
    EmptyUnion,

    #[error("automaton alphabet is empty")]
    EmptyAlphabet,

    #[error("boxes support at most 64 automaton states, got {0}")]
    TooManyStates(usize),

    #[error("resource limit hit: {what} exceeded {limit}")]
    ResourceLimit { what: &'static str, limit: usize },

    #[error("parity game deadlocks at vertex {0}")]
    Deadlock(usize),

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

fn render_violations(v: &[Violation]) -> String {
    v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
