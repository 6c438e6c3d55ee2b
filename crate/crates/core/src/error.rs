//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors raised by group construction, lattice handling and the various sums.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown group descriptor `{0}`")]
    UnknownGroup(String),

    #[error("cap exceeded: {what} needs {needed}, cap is {cap}")]
    CapExceeded { what: String, needed: f64, cap: f64 },

    #[error("operation requires an abelian group")]
    NotAbelian,

    #[error("class-sum diagonalization failed after {attempts} attempts")]
    DiagonalizationFailed { attempts: usize },

    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("operation requires a closed oriented surface")]
    RequiresClosedSurface,

    #[error("disorder data is not a coboundary; obstruction {obstruction:?}")]
    NotABoundary { obstruction: Vec<i64> },

    #[error("operation requires dual lattice data")]
    RequiresDual,

    #[error("order insertions on a nonabelian group need the Turaev-Viro backend")]
    UseTuraevViroBackend,

    #[error("weight is not even: {0}")]
    NotEven(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("integer overflow in {0}")]
    Overflow(&'static str),
}

impl Error {
    pub(crate) fn cap(what: impl Into<String>, needed: f64, cap: f64) -> Self {
        Error::CapExceeded {
            what: what.into(),
            needed,
            cap,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
