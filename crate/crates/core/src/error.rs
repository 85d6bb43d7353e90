use thiserror::Error;

use crate::greedy::Direction;
use crate::ospgraph::CycleWitness;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("cap exceeded: {what} requires {required}, cap is {cap}")]
    CapExceeded {
        what: &'static str,
        required: String,
        cap: u128,
    },
    #[error("unknown identifier `{0}`")]
    UnknownId(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("no progress: no candidate agent left while {0} solutions survive")]
    NoProgress(usize),
    #[error("missing priority for agent {agent}, direction {direction}, type {type_value}")]
    MissingPriority {
        agent: usize,
        direction: Direction,
        type_value: String,
    },
    #[error("priority table is not all-monotone: {0}")]
    MonotonicityViolation(String),
    #[error("malformed tree: {0}")]
    MalformedTree(String),
    #[error("node {0} is neither homogeneous nor revealable")]
    NotApplicable(usize),
    #[error("node {0} is not an extremal query")]
    NotExtremal(usize),
    #[error("negative cycle with total weight {}", crate::rational::format_exact(&.0.total_weight))]
    NegativeCycle(Box<CycleWitness>),
    #[error("unknown theorem id `{0}`")]
    UnknownTheorem(String),
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
