//! Deterministic linear algebra of an energy form: Green functions,
//! potentials, transfer matrices, hitting kernels, capacities, twisted
//! partition functions and Ihara zeta functions.

mod green;
mod hitting;
pub mod linalg;
mod transfer;
mod twisted;
mod zeta;

pub use green::{
    energy, green, green_chi, green_on, log_det_green_chi, log_det_i_minus_p_on, recurrent_green, rooted_green,
    rooted_log_partition, spectral_radius, symmetrized_transition, GreenBundle,
};
pub use hitting::{capacity, capacity_both, hitting_kernel};
pub use transfer::{
    edge_conductance, edge_key, transfer_matrix, transfer_matrix_with, tree_edges, Edge, Node, Root, TransferMatrix,
    TreeGreen,
};
pub use twisted::{log_partition_twisted, partition_ratio, twisted_green, twisted_operator, OneForm, TwistedGreen};
pub use zeta::{
    edge_operator, euler_characteristic, line_graph_traces, non_backtracking_counts, series_counts, zeta_ihara,
    zeta_radius, ZetaPoint, ZetaReport, NB_M_MAX,
};

use graph_model::GraphError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("operation needs a transient chain (some killing must be positive)")]
    Recurrent,
    #[error("operation needs a recurrent chain (no killing)")]
    Transient,
    #[error("singular system: {0}")]
    Singular(String),
    #[error("negative measure at vertex {0}")]
    NegativeMeasure(String),
    #[error("measure has total charge {0}, expected 0")]
    NonzeroCharge(f64),
    #[error("edge {0}-{1} has zero conductance")]
    ZeroConductance(String, String),
    #[error("degenerate edge ({0},{0})")]
    DegenerateEdge(String),
    #[error("one-form is not antisymmetric at ({0},{1})")]
    NotAntisymmetric(usize, usize),
    #[error("edge {0}-{1} does not have unit conductance")]
    NotUnit(String, String),
    #[error("empty vertex set")]
    EmptySet,
    #[error("{0}")]
    Mismatch(String),
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("guard exceeded: {0}")]
    GuardExceeded(String),
    #[error("inconsistent results: {0}")]
    Inconsistent(String),
}
