use thiserror::Error;

use crate::topology::NodeId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("a topology needs at least one node")]
    EmptyTopology,
    #[error("node {node} is out of range for a topology of {n} nodes")]
    NodeOutOfRange { node: NodeId, n: usize },
    #[error("invalid link {a}-{b}: {reason}")]
    InvalidLink { a: NodeId, b: NodeId, reason: String },
    #[error("duplicate link {a}-{b}")]
    DuplicateLink { a: NodeId, b: NodeId },
    #[error("no link between {a} and {b}")]
    MissingLink { a: NodeId, b: NodeId },
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("link {a}-{b} has loss {loss}, which makes it unusable")]
    UnusableLink { a: NodeId, b: NodeId, loss: f64 },
    #[error("distance vector did not converge within {rounds} rounds")]
    NotConverged { rounds: usize },
    #[error("next-hop cycle while extracting a path from {src} to {dst}")]
    NextHopCycle { src: NodeId, dst: NodeId },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid configuration: {0}")]
    Config(String),
}
