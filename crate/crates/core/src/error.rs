use alloc::string::String;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TopologyError {
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("node `{0}` declared twice")]
    DuplicateNode(String),
    #[error("self-loop on `{0}`")]
    SelfLoop(String),
    #[error("duplicate link `{0}` - `{1}`")]
    DuplicateLink(String, String),
    #[error("availability {value} of node `{node}` is outside (0, 1]")]
    InvalidAvailability { node: String, value: f64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructureError {
    #[error("dependency arguments must be distinct nodes")]
    NotDistinct,
    #[error("nodes are not connected in the intact network")]
    Disconnected,
    #[error("dependency index needs at least 3 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("threshold {0} is outside (0, 1)")]
    BadThreshold(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("flow {0} has no primary binding")]
    UnboundPrimary(u32),
    #[error("unknown NF type `{0}`")]
    UnknownNfType(String),
    #[error("unknown instance {0}")]
    UnknownInstance(u32),
    #[error("unknown flow {0}")]
    UnknownFlow(u32),
    #[error("instance {instance} cannot host on end node `{node}`")]
    EndNodeHost { instance: u32, node: String },
    #[error("invalid NF type `{name}`: {reason}")]
    InvalidNfType { name: String, reason: &'static str },
    #[error("invalid flow {id}: {reason}")]
    InvalidFlow { id: u32, reason: String },
}

/// Why a reservation was refused.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum ReserveError {
    #[error("flow already holds a reservation on this instance")]
    AlreadyReserved,
    #[error("insufficient free capacity")]
    CapacityExceeded,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimateError {
    #[error("class requirement {req} not reachable with up to {x_max} backup chains")]
    Infeasible { req: f64, x_max: u32 },
    #[error("availability {0} outside (0, 1)")]
    BadProbability(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProvisionError {
    #[error("no node can host NF `{nf}` for flow {flow}")]
    NoHost { flow: u32, nf: String },
    #[error("no route between the endpoints of flow {0}")]
    NoRoute(u32),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("search space of {size} exceeds the limit {limit}")]
    BoundExceeded { size: u128, limit: u128 },
    #[error("scenario too large: {0}")]
    TooLarge(String),
    #[error("no feasible allocation with up to {0} backup instances")]
    Infeasible(u32),
    #[error("search aborted after {0} placements without finishing")]
    Aborted(u64),
    #[error(transparent)]
    Model(#[from] ModelError),
}
