use std::time::Instant;

use exact_engine::green;
use graph_model::EnergyForm;
use loop_measure::{orth_exact, orth_from_moments, renorm_poly_eval, renorm_poly_recurrence};
use statrs::distribution::{ContinuousCDF, Gamma};

use super::{require_transient, soups};
use crate::stats::{chi_square, ks_test, mean_se, negative_binomial_pmf};
use crate::{purpose, timed, Check, VerificationReport, VerifyError, P_MIN, TOL_LINALG};

/// Vertices examined: at most the first two.
fn vertices(n: usize) -> Vec<usize> {
    (0..n.min(2)).collect()
}

/// Gamma marginals of `L̂^x`, negative binomial visit counts and the
/// orthogonality of the renormalized polynomials.
pub fn verify_occupation_marginals(
    e: &EnergyForm,
    fixture: &str,
    alphas: &[f64],
    n: usize,
    seed: u64,
) -> Result<VerificationReport, VerifyError> {
    let start = Instant::now();
    require_transient(e)?;
    if let Some(a) = alphas.iter().find(|&&a| !(a > 0.0)) {
        return Err(VerifyError::Precondition(format!("α = {a} must be positive")));
    }
    let g = green(e)?.g;
    let lam = e.lambda();
    let nv = e.len();
    let xs = vertices(nv);
    let (x0, y0) = (0, nv - 1);
    let mut r = VerificationReport::new("occupation_marginals", fixture, n, seed);
    let poly_pairs: Vec<(usize, usize, usize, usize)> =
        if x0 == y0 { vec![(x0, x0, 1, 1), (x0, x0, 2, 2), (x0, x0, 1, 2)] } else { vec![(x0, y0, 1, 1), (x0, y0, 2, 2), (x0, y0, 1, 2), (x0, x0, 2, 2)] };

    for (ai, &alpha) in alphas.iter().enumerate() {
        // exact cross-checks of the orthogonality relation
        for &(x, y, k, l) in &poly_pairs {
            let want = orth_exact(g[(x, y)], alpha, k, l);
            let from_moments = orth_from_moments(e, alpha, x, y, k, l)?;
            r.push(Check::relative(format!("orth_moments[α={alpha},{},{},k={k},l={l}]", e.name(x), e.name(y)), want, from_moments, TOL_LINALG));
        }
        let s = g[(x0, x0)];
        let u = 1.7 * s;
        r.push(Check::relative(
            format!("renorm_poly_recurrence[α={alpha}]"),
            renorm_poly_eval(2, u + alpha * s, s, alpha),
            renorm_poly_recurrence(2, u, s, alpha),
            TOL_LINALG,
        ));
        if n == 0 {
            continue;
        }
        let samples = soups(e, alpha, n, seed, purpose::with(purpose::SOUP, ai))?;
        let occ: Vec<_> = samples.iter().map(|s| s.occupation()).collect();
        let visits: Vec<Vec<u64>> = samples.iter().map(|s| s.visits()).collect();
        for &x in &xs {
            let gxx = g[(x, x)];
            let gam = Gamma::new(alpha, 1.0 / gxx).map_err(|err| VerifyError::Invalid(err.to_string()))?;
            let lx: Vec<f64> = occ.iter().map(|l| l[x]).collect();
            let (d, p) = ks_test(&lx, |t| gam.cdf(t));
            r.push(Check::p_value(format!("ks_gamma[α={alpha},{}]", e.name(x)), d, p, P_MIN));
            let (m, se) = mean_se(&lx);
            r.push(Check::z(format!("mean_occupation[α={alpha},{}]", e.name(x)), alpha * gxx, m, se));

            let q = 1.0 / (lam[x] * gxx);
            let top = visits.iter().map(|v| v[x]).max().unwrap_or(0) as usize;
            let mut counts = vec![0u64; top + 2];
            for v in &visits {
                counts[v[x] as usize] += 1;
            }
            let mut probs: Vec<f64> = (0..=top).map(|k| negative_binomial_pmf(k as u64, alpha, q)).collect();
            probs.push((1.0 - probs.iter().sum::<f64>()).max(0.0));
            let cs = chi_square(&counts, &probs);
            r.push(Check::p_value(format!("chi_square_negative_binomial[α={alpha},{},df {}]", e.name(x), cs.df), cs.statistic, cs.p, P_MIN));
        }
        for &(x, y, k, l) in &poly_pairs {
            let want = orth_exact(g[(x, y)], alpha, k, l);
            let vals: Vec<f64> = occ
                .iter()
                .map(|o| renorm_poly_eval(k, o[x], g[(x, x)], alpha) * renorm_poly_eval(l, o[y], g[(y, y)], alpha))
                .collect();
            let (m, se) = mean_se(&vals);
            r.push(Check::z(format!("orth[α={alpha},{},{},k={k},l={l}]", e.name(x), e.name(y)), want, m, se));
        }
    }
    Ok(timed(r.finalize(), start))
}
