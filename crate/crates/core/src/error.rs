use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("arithmetic overflow")]
    Overflow,
    #[error("subtraction below zero")]
    Underflow,
    #[error("lcm {lcm} exceeds cap {cap}")]
    CapExceeded { lcm: u128, cap: u64 },
    #[error("search space exceeds cap of {0} nodes")]
    SearchCapExceeded(u64),
    #[error("moduli are not distinct-except-largest: {0}")]
    NotSingleRepeated(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("checkpoint {path:?}: {reason}")]
    Checkpoint { path: PathBuf, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
