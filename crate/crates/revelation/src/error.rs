//! Crate-wide error type.

use crate::space::SpaceErrors;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid state space: {0}")]
    InvalidSpace(SpaceErrors),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("partitions are over different ground state sets")]
    GroundMismatch,

    #[error("contract does not belong to this state space")]
    SpaceMismatch,

    #[error("refinement map does not connect these spaces")]
    MapMismatch,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("enumeration of {count} contracts exceeds the cap of {cap}")]
    ContractGuard { count: u128, cap: u128 },

    #[error("chain enumeration exceeded the cap of {cap} sequences")]
    ChainGuard { cap: usize },

    #[error("incompatible reports: neither awareness level refines the other")]
    IncompatibleReports,

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
