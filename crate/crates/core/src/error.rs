use thiserror::Error;

use crate::medium::NodeId;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("protocol violation: {0}")]
    ProtocolViolation(String),

    #[error("no GTS allocation from node {src} to node {dest}")]
    NoRoute { src: NodeId, dest: NodeId },

    #[error("queue model does not converge for rho = {0} (requires 0 < rho < 1)")]
    NonConvergent(f64),

    #[error("multi-GTS model is not valid: {0}")]
    InvalidAllocation(String),

    #[error("scenario file: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
