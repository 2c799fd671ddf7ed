use std::time::Instant;

use exact_engine::{green, green_chi, green_on, linalg::submatrix, log_det_green_chi, rooted_log_partition};
use graph_model::{recurrent_extension, trace_on, EnergyForm, VertexSubset};
use loop_measure::{cross_hitting_series, enumerate_loops, euler_product_check, mu_meet_all, mu_nontrivial_total, wreath_check};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use samplers::RngStream;

use super::label;
use crate::{purpose, timed, Check, VerificationReport, VerifyError, TOL_LINALG};

/// Slack for floating-point rounding on one-sided bracket checks.
const ROUNDING: f64 = 1e-12;

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|v| v.abs()).fold(0.0, f64::max)
}

/// Enumerated loop masses up to `k_max` against `-log det(I - P)`.
pub fn verify_loop_mass(e: &EnergyForm, fixture: &str, k_max: usize) -> Result<VerificationReport, VerifyError> {
    let start = Instant::now();
    let mut r = VerificationReport::new("loop_mass", fixture, 0, 0);
    let exact = mu_nontrivial_total(e)?;
    r.push(Check::relative("mu_from_green_vs_symmetric_det", green(e)?.mu_nontrivial_from_g(e), exact, TOL_LINALG));
    let en = enumerate_loops(e, k_max)?;
    r.push(Check::upper(format!("enumeration_bracket[k_max={k_max}]"), 0.0, exact - en.total, en.tail + ROUNDING));
    r.push(Check::lower(format!("enumeration_below_exact[k_max={k_max}]"), 0.0, exact - en.total, 1e-12));
    let eu = euler_product_check(e, 0.5, k_max)?;
    r.push(Check::upper("euler_product_bracket[s=0.5]", 0.0, (eu.log_exact - eu.log_partial).abs(), eu.tail + ROUNDING));
    Ok(timed(r.finalize(), start))
}

/// The cross-hitting series against its log-det closed form.
pub fn verify_cross_hitting(
    e: &EnergyForm,
    fixture: &str,
    f1: &VertexSubset,
    f2: &VertexSubset,
    k_max: usize,
) -> Result<VerificationReport, VerifyError> {
    let start = Instant::now();
    let mut r = VerificationReport::new("cross_hitting", fixture, 0, 0);
    let ch = cross_hitting_series(e, f1, f2, k_max)?;
    let tag = format!("{}|{}", label(e, f1.members()), label(e, f2.members()));
    r.push(Check::upper(format!("series_bracket[{tag}]"), 0.0, (ch.exact - ch.partial).abs(), ch.tail + ROUNDING));
    let meet = mu_meet_all(e, &[f1.clone(), f2.clone()], &VertexSubset::empty(e.len()))?;
    r.push(Check::relative(format!("log_det_vs_inclusion_exclusion[{tag}]"), meet, ch.exact, TOL_LINALG));
    Ok(timed(r.finalize(), start))
}

/// Rescaled enumeration on the base graph against `-log det(I - P̃)` on the
/// wreath chain.
pub fn verify_wreath(e: &EnergyForm, fixture: &str, fibres: &[usize], k_max: usize) -> Result<VerificationReport, VerifyError> {
    let start = Instant::now();
    let mut r = VerificationReport::new("wreath", fixture, 0, 0);
    let w = wreath_check(e, fibres, k_max)?;
    r.push(Check::upper(format!("wreath_bracket[k_max={k_max}]"), 0.0, (w.exact - w.enumerated).abs(), w.tail + ROUNDING));
    r.push(Check::lower("wreath_partial_below_exact", 0.0, w.exact - w.enumerated, 1e-12));
    Ok(timed(r.finalize(), start))
}

fn random_split(n: usize, rng: &mut RngStream) -> Result<VertexSubset, VerifyError> {
    loop {
        let f: Vec<usize> = (0..n).filter(|_| rng.random::<bool>()).collect();
        if !f.is_empty() && f.len() < n {
            return Ok(VertexSubset::new(n, f)?);
        }
    }
}

fn random_measure(n: usize, rng: &mut RngStream) -> DVector<f64> {
    DVector::from_fn(n, |_, _| if rng.random::<f64>() < 0.3 { 0.0 } else { rng.random::<f64>() * 2.0 })
}

fn with_extra_killing(e: &EnergyForm, chi: &DVector<f64>) -> Result<EnergyForm, VerifyError> {
    Ok(EnergyForm::new(e.names().to_vec(), e.conductance().clone(), e.killing() + chi)?)
}

/// Resolvent equation, Jacobi's identity, the partition-function
/// factorization and root independence over `splits` random splits.
pub fn verify_exact_web(e: &EnergyForm, fixture: &str, splits: usize, seed: u64) -> Result<VerificationReport, VerifyError> {
    let start = Instant::now();
    let n = e.len();
    if n < 2 {
        return Err(VerifyError::Precondition("splits need at least two vertices".into()));
    }
    let mut r = VerificationReport::new("exact_web", fixture, 0, seed);
    let mut rng = RngStream::for_shard(seed, purpose::SPLITS, 0);
    for s in 0..splits {
        let mut chi1 = random_measure(n, &mut rng);
        if !e.is_transient() && chi1.iter().all(|&c| c == 0.0) {
            chi1[0] = 1.0;
        }
        let chi2 = random_measure(n, &mut rng);
        // transient base for the split identities
        let base = if e.is_transient() { e.clone() } else { with_extra_killing(e, &chi1)? };
        let f = random_split(n, &mut rng)?;
        let d = f.complement();

        let g1 = green_chi(e, &chi1)?;
        let sum = &chi1 + &chi2;
        let g2 = green_chi(e, &sum)?;
        let lhs = &g1 - &g2;
        let rhs1 = &g1 * DMatrix::from_diagonal(&chi2) * &g2;
        let rhs2 = &g2 * DMatrix::from_diagonal(&chi2) * &g1;
        r.push(Check::residual(format!("resolvent[{s}]"), 0.0, max_abs(&(&lhs - rhs1)).max(max_abs(&(&lhs - rhs2))), TOL_LINALG));

        let b = green(&base)?;
        let (_, ld_d) = green_on(&base, &d)?;
        let gf = submatrix(&b.g, f.members(), f.members());
        let ld_gf = gf.clone().cholesky().map(|c| 2.0 * c.l().diagonal().iter().map(|v| v.ln()).sum::<f64>()).ok_or_else(|| VerifyError::Invalid("G|F not positive definite".into()))?;
        r.push(Check::relative(format!("jacobi[{s}]"), b.log_det_g - ld_gf, ld_d, TOL_LINALG));

        let tr = trace_on(&base, &f)?;
        let bt = green(&tr)?;
        r.push(Check::residual(format!("trace_green_is_restriction[{s}]"), 0.0, max_abs(&(&bt.g - &gf)), TOL_LINALG));
        r.push(Check::relative(format!("partition_factorization[{s}]"), b.log_det_g, ld_d + bt.log_det_g, TOL_LINALG));
        let lchi = log_det_green_chi(e, &sum)?;
        r.push(Check::relative(format!("log_det_g_chi_vs_inverse[{s}]"), lchi, g2.clone().determinant().ln(), TOL_LINALG));

        let rec = if e.is_transient() { recurrent_extension(e)? } else { e.clone() };
        let m = rec.len();
        let r1 = rng.random_range(0..m);
        let r2 = rng.random_range(0..m);
        let (z1, z2) = (rooted_log_partition(&rec, r1)?, rooted_log_partition(&rec, r2)?);
        r.push(Check::relative(format!("root_independence[{s}:{}/{}]", rec.name(r1), rec.name(r2)), z1, z2, TOL_LINALG));
        if e.is_transient() {
            r.push(Check::relative(format!("rooted_extension_is_z[{s}]"), b.log_det_g, z1, TOL_LINALG));
        }
    }
    Ok(timed(r.finalize(), start))
}
