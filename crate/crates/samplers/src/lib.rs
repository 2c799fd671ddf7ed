//! Seeded samplers: discrete loops and loop soups, bridges, the Gaussian
//! free field, and Wilson's algorithm with its erased loops.

mod bridge;
mod gff;
mod loops;
mod rng;
mod wilson;

pub use bridge::{sample_bridge, Bridge, BridgeSampler, BRIDGE_STEP_LIMIT};
pub use gff::{hermite_he, sample_gff, wick_power, FieldSample, GffSampler};
pub use loops::{
    draw_index, holding_time, sample_loop_soup, sample_pointed_loop, trivial_occupation, LoopEnsemble, LoopSampler,
    LENGTH_TAIL_REL, POWER_STORAGE_LIMIT,
};
pub use rng::{run_sharded, shard_sizes, RngStream, SHARDS};
pub use wilson::{lerw, loop_erase, loop_erase_checked, wilson_sample, SpanningTree, WilsonSample, WALK_STEP_LIMIT};

use exact_engine::EngineError;
use loop_measure::LoopError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SampleError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Loop(#[from] LoopError),
    #[error("sampler needs a transient chain")]
    Recurrent,
    #[error("a vertex root needs a recurrent chain")]
    Transient,
    #[error("no nontrivial loops on this graph")]
    NoLoops,
    #[error("G between vertices {0} and {1} vanishes")]
    Unreachable(usize, usize),
    #[error("step {0}->{1} is not an edge")]
    InvalidStep(usize, usize),
    #[error("guard exceeded: {0}")]
    Guard(String),
    #[error("{0}")]
    Invalid(String),
}
