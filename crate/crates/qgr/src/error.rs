//! Error type shared by every module of the crate.

use thiserror::Error;

/// Failures reported by the algebraic engines.
///
/// Every failure is typed: nothing in the crate silently returns a partial
/// answer when an invariant is violated or a computation budget runs out.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("unknown Cartan type `{0}`")]
    UnknownCartanType(String),

    #[error("vertex {vertex} is out of range for rank {rank}")]
    VertexOutOfRange { vertex: usize, rank: usize },

    #[error("invalid Q-datum: {0}")]
    InvalidQDatum(String),

    #[error("invalid sequence: {0}")]
    InvalidSequence(String),

    #[error("({i},{p}) lies outside the window of the adapted sequence")]
    OutsideWindow { i: usize, p: i64 },

    #[error("({i},{p}) is not a point of the lattice below the height function")]
    PointOutsideLattice { i: usize, p: i64 },

    #[error("index {k} is not exchangeable")]
    NotExchangeable { k: usize },

    #[error("move {op} does not apply at position {k}: {reason}")]
    MoveNotApplicable {
        op: &'static str,
        k: usize,
        reason: String,
    },

    #[error("computation budget of {budget} steps exhausted in {context}")]
    BudgetExhausted { budget: usize, context: String },

    #[error("exact division failed: {0}")]
    NotDivisible(String),

    #[error("element is not pointed: {0}")]
    NotPointed(String),

    #[error("cone precondition unmet")]
    ConePreconditionUnmet,

    #[error("screening check failed: {0}")]
    Screening(String),

    #[error("module is not thin: {0}")]
    NotThin(String),

    #[error("thin ansatz refuted by the screening check in direction {i}: residual {residual}")]
    ThinAnsatzRefuted { i: usize, residual: String },

    #[error("Frenkel-Mukhin algorithm failed: {0}")]
    FrenkelMukhin(String),

    #[error("Kazhdan-Lusztig triangularization failed: {0}")]
    KazhdanLusztig(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("no script relates the two sequences: {0}")]
    NoScript(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
