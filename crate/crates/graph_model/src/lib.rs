//! Finite weighted graphs with killing and the chains derived from them.

mod energy;
pub mod fixtures;
mod io;
mod ops;

pub use energy::{components, EnergyForm, VertexSubset, SYMMETRY_TOL};
pub use io::{load_energy_form, read_graph, GraphDocument};
pub use ops::{
    build_wreath, build_wreath_with_limit, kill_at, recurrent_extension, restrict, trace_on, CEMETERY,
    WREATH_STATE_LIMIT,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GraphError {
    #[error("malformed graph: {0}")]
    Malformed(String),
    #[error("asymmetric conductance between {0} and {1}")]
    Asymmetric(String, String),
    #[error("negative conductance on edge {0}-{1}")]
    NegativeConductance(String, String),
    #[error("negative killing at {0}")]
    NegativeKilling(String),
    #[error("self loop at {0}")]
    SelfLoop(String),
    #[error("duplicate edge {0}-{1}")]
    DuplicateEdge(String, String),
    #[error("duplicate vertex {0}")]
    DuplicateVertex(String),
    #[error("unknown vertex {0}")]
    UnknownVertex(String),
    #[error("disconnected graph: {0} is not reachable from {1}")]
    Disconnected(String, String),
    #[error("vertex {0} has no edges and no killing (lambda = 0)")]
    ZeroLambda(String),
    #[error("empty vertex set")]
    EmptySet,
    #[error("operation needs a transient chain (some killing must be positive)")]
    Recurrent,
    #[error("wreath product would have {states} states (limit {limit})")]
    WreathTooLarge { states: usize, limit: usize },
    #[error("{0}")]
    Invalid(String),
}
