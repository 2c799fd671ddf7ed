use std::time::Instant;

use graph_model::EnergyForm;
use rand_distr::{Beta, Distribution};
use samplers::SampleError;

use super::{require_transient, soups};
use crate::stats::{difference, mean_se};
use crate::{draw_many, purpose, timed, Check, VerificationReport, VerifyError};

const GEM_REMAINDER: f64 = 1e-13;

/// `E[Σ p_i²] = 1/(1+α)`, `E[Σ p_i³] = 2/((1+α)(2+α))` under PD(0, α).
fn pd_targets(alpha: f64) -> (f64, f64) {
    (1.0 / (1.0 + alpha), 2.0 / ((1.0 + alpha) * (2.0 + alpha)))
}

/// The loops' shares of `L̂^x` against Poisson–Dirichlet(0, α). The trivial
/// loops at `x` enter through their conditional expectation, as they are
/// aggregated into one Gamma variable.
pub fn verify_poisson_dirichlet(e: &EnergyForm, fixture: &str, x: usize, alpha: f64, n: usize, seed: u64) -> Result<VerificationReport, VerifyError> {
    let start = Instant::now();
    require_transient(e)?;
    if x >= e.len() || !(alpha > 0.0) {
        return Err(VerifyError::Precondition("need a vertex and α > 0".into()));
    }
    let (t2, t3) = pd_targets(alpha);
    let mut r = VerificationReport::new("poisson_dirichlet", &format!("{fixture}:{}", e.name(x)), n, seed);
    if n == 0 {
        return Ok(timed(r.finalize(), start));
    }
    let samples = soups(e, alpha, n, seed, purpose::SOUP)?;
    let mut s2 = Vec::with_capacity(n);
    let mut s3 = Vec::with_capacity(n);
    for s in &samples {
        let parts: Vec<f64> = s
            .loops
            .iter()
            .map(|lp| lp.verts.iter().zip(&lp.holding).filter(|(&v, _)| v == x).map(|(_, &t)| t).sum::<f64>())
            .filter(|&t| t > 0.0)
            .collect();
        let total = s.trivial[x] + parts.iter().sum::<f64>();
        let w = s.trivial[x] / total;
        s2.push(parts.iter().map(|p| (p / total).powi(2)).sum::<f64>() + w * w * t2);
        s3.push(parts.iter().map(|p| (p / total).powi(3)).sum::<f64>() + w.powi(3) * t3);
    }
    let beta = Beta::new(1.0, alpha).map_err(|err| VerifyError::Invalid(err.to_string()))?;
    let gem: Vec<(f64, f64)> = draw_many(seed, purpose::GEM, n, |rng| {
        let (mut rest, mut a2, mut a3) = (1.0f64, 0.0, 0.0);
        let mut sticks = 0;
        while rest > GEM_REMAINDER {
            let v: f64 = beta.sample(rng);
            let p = rest * v;
            a2 += p * p;
            a3 += p * p * p;
            rest -= p;
            sticks += 1;
            if sticks > 1_000_000 {
                return Err(SampleError::Guard("stick-breaking did not converge".into()));
            }
        }
        Ok((a2, a3))
    })?;
    let g2: Vec<f64> = gem.iter().map(|g| g.0).collect();
    let g3: Vec<f64> = gem.iter().map(|g| g.1).collect();
    for (name, soup, sim, want) in [("S2", &s2, &g2, t2), ("S3", &s3, &g3, t3)] {
        let a = mean_se(soup);
        let b = mean_se(sim);
        r.push(Check::z(format!("loops_{name}"), want, a.0, a.1));
        r.push(Check::z(format!("gem_{name}"), want, b.0, b.1));
        let (d, sd) = difference(a, b);
        r.push(Check::z(format!("loops_vs_gem_{name}"), 0.0, d, sd));
    }
    Ok(timed(r.finalize(), start))
}
