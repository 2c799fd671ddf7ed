pub mod dynkin;
pub mod erasure;
pub mod exact;
pub mod marginals;
pub mod network;
pub mod pd;
pub mod reflection;
pub mod transfer;
pub mod variation;
pub mod zeta;

use graph_model::EnergyForm;
use loop_measure::mu_nontrivial_total;
use samplers::{trivial_occupation, LoopEnsemble, LoopSampler};

use crate::{draw_many, VerifyError};

/// Soup draws at intensity `α`; graphs without nontrivial loops only get
/// the trivial part.
pub(crate) fn soups(e: &EnergyForm, alpha: f64, n: usize, seed: u64, tag: u32) -> Result<Vec<LoopEnsemble>, VerifyError> {
    if n == 0 {
        return Ok(Vec::new());
    }
    if mu_nontrivial_total(e)? == 0.0 {
        let lambda = e.lambda().clone();
        let len = e.len();
        return draw_many(seed, tag, n, |rng| {
            Ok(LoopEnsemble { n: len, alpha, loops: Vec::new(), trivial: trivial_occupation(&lambda, alpha, rng)? })
        });
    }
    let sampler = LoopSampler::new(e, None)?;
    draw_many(seed, tag, n, |rng| sampler.soup(alpha, rng))
}

pub(crate) fn require_transient(e: &EnergyForm) -> Result<(), VerifyError> {
    if e.is_transient() {
        Ok(())
    } else {
        Err(VerifyError::Precondition("the suite needs a transient chain (some κ > 0)".into()))
    }
}

pub(crate) fn label(e: &EnergyForm, pts: &[usize]) -> String {
    pts.iter().map(|&p| e.name(p)).collect::<Vec<_>>().join(",")
}
