use std::time::Instant;

use exact_engine::{green, linalg::spd_logdet, partition_ratio, OneForm};
use graph_model::EnergyForm;
use loop_measure::{enumerate_loops, mu_nontrivial_total, mu_occupation_nontrivial, occupation_laplace};
use nalgebra::DMatrix;
use samplers::LoopEnsemble;

use super::{require_transient, soups};
use crate::stats::mean_se;
use crate::{purpose, timed, Check, VerificationReport, VerifyError, TOL_FD, TOL_LINALG, TOL_SCHWINGER};

const DOMINATION_TOL: f64 = 1e-12;
/// Relative central-difference step.
pub const FD_STEP: f64 = 1e-5;
const ENUMERATION_K: usize = 14;

/// A perturbed energy form `e'` and one-form `ω` with intensity `α`.
#[derive(Clone, Debug)]
pub struct Variation {
    pub label: String,
    pub e2: EnergyForm,
    pub omega: OneForm,
    pub alpha: f64,
}

fn check_domination(e: &EnergyForm, e2: &EnergyForm) -> Result<(), VerifyError> {
    if e.names() != e2.names() {
        return Err(VerifyError::Precondition("e and e′ live on different vertex sets".into()));
    }
    let n = e.len();
    for x in 0..n {
        if e2.lambda()[x] < e.lambda()[x] - DOMINATION_TOL {
            return Err(VerifyError::Precondition(format!("λ′ < λ at {}", e.name(x))));
        }
        for y in 0..n {
            if e2.c(x, y) > e.c(x, y) + DOMINATION_TOL {
                return Err(VerifyError::Precondition(format!("C′ > C on {}-{}", e.name(x), e.name(y))));
            }
        }
    }
    Ok(())
}

/// `∏ (C'/C)^N e^{iωN} e^{-<λ'-λ, L̂>}` as `(re, im)`.
fn functional(e: &EnergyForm, e2: &EnergyForm, omega: &OneForm, s: &LoopEnsemble) -> (f64, f64) {
    let n = e.len();
    let nxy = s.traversals();
    let l = s.occupation();
    let mut log_mod = 0.0;
    let mut phase = 0.0;
    for x in 0..n {
        log_mod -= (e2.lambda()[x] - e.lambda()[x]) * l[x];
        for y in 0..n {
            let k = nxy[(x, y)];
            if k == 0 {
                continue;
            }
            let ratio = e2.c(x, y) / e.c(x, y);
            if ratio == 0.0 {
                return (0.0, 0.0);
            }
            log_mod += k as f64 * ratio.ln();
            phase += k as f64 * omega.at(x, y);
        }
    }
    let m = log_mod.exp();
    (m * phase.cos(), m * phase.sin())
}

fn with_killing(e: &EnergyForm, x: usize, kx: f64) -> Result<EnergyForm, VerifyError> {
    let mut k = e.killing().clone();
    k[x] = kx;
    Ok(EnergyForm::new(e.names().to_vec(), e.conductance().clone(), k)?)
}

fn log_det_g_shift(lap: &DMatrix<f64>, shift: &[(usize, f64)]) -> Result<f64, VerifyError> {
    let mut m = lap.clone();
    for &(i, h) in shift {
        m[(i, i)] += h;
    }
    Ok(-spd_logdet(&m)?)
}

/// `(Z_{e',ω}/Z_e)^α` against the soup, and the derivative identities
/// `∂_κx μ(p>1) = -μ(l̂^x 1_{p>1})` and `∂²_{χx χy} log det G_χ = (G^{xy})²`.
pub fn verify_energy_variation(
    e: &EnergyForm,
    fixture: &str,
    v: &Variation,
    n: usize,
    seed: u64,
) -> Result<VerificationReport, VerifyError> {
    let start = Instant::now();
    require_transient(e)?;
    check_domination(e, &v.e2)?;
    if !(v.alpha > 0.0) {
        return Err(VerifyError::Precondition("α must be positive".into()));
    }
    let mut r = VerificationReport::new("energy_variation", &format!("{fixture}:{}", v.label), n, seed);
    let ratio = partition_ratio(e, &v.e2, &v.omega, v.alpha)?;
    r.push(Check::residual("partition_ratio_is_real", 0.0, ratio.im, TOL_LINALG));
    let same_c = (0..e.len()).all(|x| (0..e.len()).all(|y| e.c(x, y) == v.e2.c(x, y)));
    if same_c && v.omega.is_zero() {
        let chi = v.e2.lambda() - e.lambda();
        r.push(Check::relative("ratio_vs_occupation_laplace", occupation_laplace(e, v.alpha, &chi)?, ratio.re, TOL_LINALG));
    }

    // ∂/∂κ_x of μ(p>1) at a killed vertex
    let g = green(e)?.g;
    if let Some(x) = (0..e.len()).find(|&x| e.killing()[x] > 0.0) {
        let kx = e.killing()[x];
        let h = (FD_STEP * e.lambda()[x]).min(kx / 4.0);
        let mu_at = |k: f64| -> Result<f64, VerifyError> { Ok(mu_nontrivial_total(&with_killing(e, x, k)?)?) };
        let fd = |h: f64| -> Result<f64, VerifyError> { Ok((mu_at(kx + h)? - mu_at(kx - h)?) / (2.0 * h)) };
        let (d1, d2) = (fd(h)?, fd(2.0 * h)?);
        let exact = mu_occupation_nontrivial(e, x)?;
        r.push(Check::residual(format!("d_mu_d_kappa[{}]", e.name(x)), exact, -d1, TOL_FD));
        r.push(Check::residual(format!("d_mu_d_kappa_step_consistency[{}]", e.name(x)), d1, d2, 10.0 * TOL_FD));
        if let Ok(en) = enumerate_loops(e, ENUMERATION_K) {
            // E[l̂^x | discrete loop] = N_x/λ_x, and N_x ≤ length
            let partial = en.weighted_sum(|l| l.visits(e.len())[x] as f64 / e.lambda()[x]);
            let k1 = (ENUMERATION_K + 1) as f64;
            let tail = if en.rho < 1.0 {
                e.len() as f64 * en.rho.powf(k1) / ((1.0 - en.rho) * e.lambda()[x])
            } else {
                f64::INFINITY
            };
            r.push(Check::upper(format!("enumeration_occupation_bracket[{}]", e.name(x)), 0.0, exact - partial, tail));
            r.push(Check::lower(format!("enumeration_occupation_below[{}]", e.name(x)), 0.0, exact - partial, 1e-12));
        }
    }

    // Schwinger: mixed second difference of log det G_χ at χ = 0
    if e.len() >= 2 {
        let (x, y) = (0, e.len() - 1);
        let lap = e.laplacian();
        let scale = e.lambda()[x].min(e.lambda()[y]);
        let second = |h: f64| -> Result<f64, VerifyError> {
            let f = |a: f64, b: f64| log_det_g_shift(&lap, &[(x, a), (y, b)]);
            Ok((f(h, h)? - f(h, -h)? - f(-h, h)? + f(-h, -h)?) / (4.0 * h * h))
        };
        let h = FD_STEP * scale;
        let (s1, s2) = (second(h)?, second(2.0 * h)?);
        let want = g[(x, y)].powi(2);
        let name = format!("schwinger[{},{}]", e.name(x), e.name(y));
        r.push(Check::residual(&name, want, s1, TOL_SCHWINGER));
        r.push(Check::residual(format!("{name}_step_consistency"), s1, s2, 10.0 * TOL_SCHWINGER));
        let diag = |h: f64| -> Result<f64, VerifyError> {
            let f = |a: f64| log_det_g_shift(&lap, &[(x, a)]);
            Ok((f(h)? - 2.0 * f(0.0)? + f(-h)?) / (h * h))
        };
        r.push(Check::residual(format!("schwinger[{0},{0}]", e.name(x)), g[(x, x)].powi(2), diag(h)?, TOL_SCHWINGER));
    }

    if n > 0 {
        let samples = soups(e, v.alpha, n, seed, purpose::SOUP)?;
        let vals: Vec<(f64, f64)> = samples.iter().map(|s| functional(e, &v.e2, &v.omega, s)).collect();
        let re: Vec<f64> = vals.iter().map(|v| v.0).collect();
        let im: Vec<f64> = vals.iter().map(|v| v.1).collect();
        let (mr, sr) = mean_se(&re);
        let (mi, si) = mean_se(&im);
        r.push(Check::z("functional_mean_real", ratio.re, mr, sr));
        r.push(Check::z("functional_mean_imaginary", ratio.im, mi, si));
    }
    Ok(timed(r.finalize(), start))
}
