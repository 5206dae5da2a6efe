use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("cell ({row}, {col}) is outside the {n}x{n} grid")]
    CellOutOfRange { row: usize, col: usize, n: usize },

    #[error("cells share a {axis} ({index}); not a partial permutation")]
    NotMatching { axis: &'static str, index: usize },

    #[error("ground size mismatch: {left} vs {right}")]
    GroundMismatch { left: usize, right: usize },

    #[error("member {index}: {reason}")]
    InvalidMember { index: usize, reason: String },

    #[error("duplicate member at index {index}")]
    DuplicateMember { index: usize },

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("budget exhausted: {0}")]
    Budget(String),

    #[error("internal invariant broken: {0}")]
    Internal(String),

    #[error("malformed input: {0}")]
    Parse(String),
}

impl Error {
    /// True for errors caused by a work budget rather than bad input.
    pub fn is_budget(&self) -> bool {
        matches!(self, Error::Budget(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
