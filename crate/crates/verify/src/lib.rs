//! Verification suites. Every sampler is compared against a closed form
//! from the exact engine or the loop measure, and every closed form is
//! cross-checked against a second route where one exists.

mod report;
pub mod stats;
mod suites;

pub use report::{
    Check, Statistic, VerificationReport, BONFERRONI_COUNT, P_MIN, TOL_FD, TOL_LINALG, TOL_SCHWINGER, Z_GATE,
    Z_GATE_RELAXED,
};
pub use suites::dynkin::{isserlis_moment, moment_points, verify_dynkin};
pub use suites::erasure::{self_avoiding_paths, verify_loop_erasure};
pub use suites::exact::{verify_cross_hitting, verify_exact_web, verify_loop_mass, verify_wreath};
pub use suites::marginals::verify_occupation_marginals;
pub use suites::network::verify_erased_loops;
pub use suites::pd::verify_poisson_dirichlet;
pub use suites::reflection::{counterexample_terms, verify_reflection_positivity, CounterexampleTerms, Reflection};
pub use suites::transfer::{spanning_trees, verify_transfer_current};
pub use suites::variation::{verify_energy_variation, Variation};
pub use suites::zeta::verify_zeta;

use exact_engine::EngineError;
use graph_model::GraphError;
use loop_measure::LoopError;
use samplers::{run_sharded, RngStream, SampleError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VerifyError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Loop(#[from] LoopError),
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("{0}")]
    Invalid(String),
}

/// Stream purposes; each Monte Carlo run of a suite draws from its own tag.
pub(crate) mod purpose {
    pub const SOUP: u32 = 1;
    pub const GFF: u32 = 2;
    pub const BRIDGE: u32 = 3;
    pub const WILSON: u32 = 4;
    pub const LERW: u32 = 5;
    pub const GEM: u32 = 6;
    pub const SPLITS: u32 = 7;
    /// Added to a base tag to separate runs that differ in a parameter.
    pub fn with(base: u32, index: usize) -> u32 {
        base | ((index as u32 + 1) << 8)
    }
}

/// `n` draws of `draw`, sharded; the concatenation is in shard order, so it
/// depends only on `(seed, tag, n)`.
pub(crate) fn draw_many<T, F>(seed: u64, tag: u32, n: usize, draw: F) -> Result<Vec<T>, VerifyError>
where
    T: Send,
    F: Fn(&mut RngStream) -> Result<T, SampleError> + Sync,
{
    let parts = run_sharded(seed, tag, n, |rng, _, count| (0..count).map(|_| draw(rng)).collect::<Result<Vec<T>, _>>());
    let mut out = Vec::with_capacity(n);
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

pub(crate) fn timed(mut r: VerificationReport, start: std::time::Instant) -> VerificationReport {
    r.wall_time_s = Some(start.elapsed().as_secs_f64());
    r
}
