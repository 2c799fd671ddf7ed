//! The loop measure on a finite energy form: masses of discrete loops,
//! a brute-force enumeration oracle, α-permanents and the exact moments,
//! Laplace transforms and hit/avoid masses of the loop soup.

mod enumerate;
mod hitting;
mod loops;
mod moments;
mod permanent;
mod polynomials;

pub use enumerate::{
    enumerate_loops, enumerate_loops_with_guard, euler_product_check, tail_bound, wreath_check, EnumerationGuard,
    Enumeration, EulerCheck, WreathCheck,
};
pub use hitting::{cross_hitting_series, mu_hit_avoid, mu_meet_all, CrossHitting, HitAvoid, HIT_FAMILY_MAX};
pub use loops::{mu_discrete, mu_nontrivial_total, DiscreteLoop, PointedLoop};
pub use moments::{
    centered_moment, cyclic_moment, edge_count_factorial_moment, loop_product_moment, mu_occupation_nontrivial,
    mu_visits, occupation_laplace, occupation_moment, trivial_log_laplace,
};
pub use permanent::{alpha_permanent, alpha_permanent_coeffs, PERMANENT_MAX};
pub use polynomials::{orth_exact, orth_from_moments, renorm_poly_coeffs, renorm_poly_eval, renorm_poly_recurrence};

use exact_engine::EngineError;
use graph_model::GraphError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LoopError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("loop step {0}-{1} has zero conductance")]
    ZeroStep(String, String),
    #[error("trivial one-point loop has infinite mass")]
    Trivial,
    #[error("empty loop")]
    Empty,
    #[error("guard exceeded: {0}")]
    GuardExceeded(String),
    #[error("sets overlap at vertex {0}")]
    Overlap(String),
    #[error("negative measure at vertex {0}")]
    NegativeMeasure(String),
    #[error("{0}")]
    Invalid(String),
    #[error("inconsistent results: {0}")]
    Inconsistent(String),
}
