use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("trivial group: a0 = 1 has no residues")]
    TrivialGroup,
    #[error("slot {slot} out of range 1..={m}")]
    SlotOutOfRange { slot: usize, m: usize },
    #[error("not an isolated singularity: {0}")]
    NotIsolated(String),
    #[error("point outside the domain: {0}")]
    Domain(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("lattice error: {0}")]
    Lattice(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
