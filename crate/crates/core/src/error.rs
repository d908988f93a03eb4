//! Crate-wide error type.

use alloc::string::String;
use core::fmt;

use crate::types::{CountryCode, UserId};

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A line of an input file could not be parsed.
    Parse { line: usize, message: String },
    /// Filtering or construction produced a dataset with no users.
    EmptyDataset,
    /// A country code was requested that is not present in the matrix.
    UnknownCountry(CountryCode),
    /// A user was requested that is not present in the matrix.
    UnknownUser(UserId),
    /// A user row contains no playable entries and cannot be normalized.
    EmptyRow(UserId),
    /// Two probability vectors were compared over different supports.
    MismatchedSupports,
    /// Profiles with different bases or artist indices were combined.
    ProfileMismatch,
    /// A support or profile total required to be positive was zero.
    ZeroTotal,
    /// An empty support set was supplied where at least one artist is needed.
    EmptySupport,
    /// Rank correlation is undefined: one of the inputs is constant.
    ConstantInput,
    /// Not enough observations for the requested statistic.
    InsufficientData { needed: usize, got: usize },
    /// A sample with zero variance where variability is required.
    ZeroVariance,
    /// Affinity propagation terminated without electing any exemplar.
    NoExemplars,
    /// Training produced a non-finite loss.
    Diverged { epoch: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Parse { line, message } => write!(f, "parse error at line {line}: {message}"),
            Error::EmptyDataset => write!(f, "no users remain in the dataset"),
            Error::UnknownCountry(c) => write!(f, "unknown country: {c}"),
            Error::UnknownUser(u) => write!(f, "unknown user: {u}"),
            Error::EmptyRow(u) => write!(f, "user {u} has no playcounts to normalize"),
            Error::MismatchedSupports => write!(f, "probability vectors have different supports"),
            Error::ProfileMismatch => write!(f, "profiles have different bases or artist indices"),
            Error::ZeroTotal => write!(f, "profile total is zero"),
            Error::EmptySupport => write!(f, "support set is empty"),
            Error::ConstantInput => {
                write!(f, "rank correlation undefined: input vector is constant")
            }
            Error::InsufficientData { needed, got } => {
                write!(f, "insufficient data: need at least {needed}, got {got}")
            }
            Error::ZeroVariance => write!(f, "zero variance where variability is required"),
            Error::NoExemplars => write!(
                f,
                "affinity propagation elected no exemplars; try a preference of lower magnitude"
            ),
            Error::Diverged { epoch } => {
                write!(f, "training loss became non-finite at epoch {epoch}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
