use std::fmt;

use crate::words::Word;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("generator index 0 is not a letter")]
    ZeroGenerator,

    #[error("ball of rank {rank} and radius {radius} has {predicted} words, above the cap of {cap}")]
    BallTooLarge {
        rank: u32,
        radius: usize,
        predicted: u128,
        cap: usize,
    },

    #[error("homomorphism has no image for generator {0}")]
    MissingImage(i32),

    #[error("length function is undefined on {0}")]
    LengthUndefined(Word),

    #[error("length function is not symmetric on the set: psi({left}^-1 {right}) differs from its transpose by {gap:e}")]
    Asymmetric { left: Word, right: Word, gap: f64 },

    #[error("iteration cap of {iterations} reached without convergence")]
    NonConvergence { iterations: usize },

    #[error("element {0} has zero length, lacunarity is undefined")]
    ZeroLength(Word),

    #[error("duplicate element {0}")]
    DuplicateElement(Word),

    #[error("need at least {min} elements, got {got}")]
    TooFew { min: usize, got: usize },

    #[error("coefficient dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("coefficient dimension {0} outside 1..={max}", max = crate::algebra::MAX_DIM)]
    BadDimension(usize),

    #[error("support grew to {size} terms, above the cap of {cap}")]
    SupportTooLarge { size: usize, cap: usize },

    #[error("product enumeration needs {needed} products, above the cap of {cap}")]
    BudgetExceeded { needed: u128, cap: u128 },

    #[error("element is not supported on the rank-1 group with scalar coefficients")]
    NotRankOne,

    #[error("haagerup-pisier bound requires a certified free support")]
    MissingFreeCertificate,

    #[error("the identity cannot be a member of a free basis")]
    IdentityInSet,

    #[error("empty sample: at least one trial is required")]
    EmptySample,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{0}")]
    Parse(#[from] ParseError),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Location-aware parse failure for word literals and fixture files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            column,
            message: message.into(),
        }
    }

    pub(crate) fn at_line(mut self, line: usize) -> Self {
        self.line = line;
        self
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for ParseError {}
