//! Computational tools for semigroup BMO norms of lacunary series on free
//! groups and the integers, and for free symmetric-word sets in `F_∞`.

pub mod algebra;
pub mod cli;
pub mod error;
pub mod io;
pub mod lacunary;
pub mod lengths;
pub mod linalg;
pub mod semigroup_bmo;
pub mod sidon_sets;
pub mod truncated;
pub mod words;

pub use algebra::GroupAlgebraElement;
pub use error::{Error, ParseError, Result};
pub use lengths::LengthFunction;
pub use words::Word;
