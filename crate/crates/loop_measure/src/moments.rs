use exact_engine::{green, linalg::spd_logdet, log_det_green_chi};
use graph_model::EnergyForm;
use nalgebra::{DMatrix, DVector};

use crate::permanent::{alpha_permanent, alpha_permanent_coeffs};
use crate::LoopError;

fn green_block(e: &EnergyForm, points: &[usize]) -> Result<DMatrix<f64>, LoopError> {
    let g = green(e)?.g;
    let k = points.len();
    if let Some(&bad) = points.iter().find(|&&p| p >= e.len()) {
        return Err(LoopError::Invalid(format!("vertex index {bad} out of range")));
    }
    Ok(DMatrix::from_fn(k, k, |i, j| g[(points[i], points[j])]))
}

/// `E[∏ L̂_α^{x_i}] = Per_α(G^{x_i,x_j})`.
pub fn occupation_moment(e: &EnergyForm, alpha: f64, points: &[usize]) -> Result<f64, LoopError> {
    alpha_permanent(&green_block(e, points)?, alpha, false)
}

/// `E[∏ (L̂_α^{x_i} - αG^{x_i,x_i})] = Per⁰_α(G^{x_i,x_j})`.
pub fn centered_moment(e: &EnergyForm, alpha: f64, points: &[usize]) -> Result<f64, LoopError> {
    alpha_permanent(&green_block(e, points)?, alpha, true)
}

/// Multiple local time of a single loop: `μ(l̂^{x_1,…,x_n}) = G^{x_1,x_2}…G^{x_n,x_1}`.
pub fn cyclic_moment(e: &EnergyForm, points: &[usize]) -> Result<f64, LoopError> {
    let g = green_block(e, points)?;
    let k = points.len();
    if k == 0 {
        return Err(LoopError::Empty);
    }
    Ok((0..k).map(|i| g[(i, (i + 1) % k)]).product())
}

/// `μ(∏ l̂^{x_i})`, the `α¹` coefficient of `Per_α`: a sum over cyclic
/// permutations. Includes trivial loops, so one point gives `G^{xx}`.
pub fn loop_product_moment(e: &EnergyForm, points: &[usize]) -> Result<f64, LoopError> {
    if points.is_empty() {
        return Err(LoopError::Empty);
    }
    Ok(alpha_permanent_coeffs(&green_block(e, points)?, false)?[1])
}

/// `μ(l̂^x 1_{p>1}) = G^{xx} - 1/λ_x`.
pub fn mu_occupation_nontrivial(e: &EnergyForm, x: usize) -> Result<f64, LoopError> {
    Ok(green(e)?.g[(x, x)] - 1.0 / e.lambda()[x])
}

/// `E[exp(-<L̂_α, χ>)]`, computed as `det(I + √χ G √χ)^{-α}` and as
/// `(det G_χ / det G)^α`; the two must agree to 1e-9.
pub fn occupation_laplace(e: &EnergyForm, alpha: f64, chi: &DVector<f64>) -> Result<f64, LoopError> {
    if chi.len() != e.len() {
        return Err(LoopError::Invalid("χ has the wrong length".into()));
    }
    if let Some(i) = chi.iter().position(|&c| c < 0.0 || !c.is_finite()) {
        return Err(LoopError::NegativeMeasure(e.name(i).into()));
    }
    let b = green(e)?;
    let n = e.len();
    let s = chi.map(f64::sqrt);
    let m = DMatrix::from_fn(n, n, |i, j| s[i] * b.g[(i, j)] * s[j]) + DMatrix::identity(n, n);
    let first = -alpha * spd_logdet(&m)?;
    let second = alpha * (log_det_green_chi(e, chi)? - b.log_det_g);
    if (first - second).abs() > 1e-9 * (1.0 + first.abs()) {
        return Err(LoopError::Inconsistent(format!("log Laplace {first} vs {second}")));
    }
    Ok(first.exp())
}

/// Log Laplace transform of the aggregated trivial loops:
/// `-α Σ_x log(1 + χ_x/λ_x)`.
pub fn trivial_log_laplace(e: &EnergyForm, alpha: f64, chi: &DVector<f64>) -> f64 {
    -alpha * chi.iter().zip(e.lambda().iter()).map(|(c, l)| (c / l).ln_1p()).sum::<f64>()
}

/// `μ(N_{x,y}(N_{x,y}-1)…(N_{x,y}-k+1)) = (k-1)! (G^{xy} C_{xy})^k`.
pub fn edge_count_factorial_moment(e: &EnergyForm, x: usize, y: usize, k: usize) -> Result<f64, LoopError> {
    if k == 0 {
        return Err(LoopError::Invalid("factorial moment order must be positive".into()));
    }
    let c = if x == y { 0.0 } else { e.c(x, y) };
    if c <= 0.0 {
        return Err(LoopError::ZeroStep(e.name(x).into(), e.name(y).into()));
    }
    let g = green(e)?.g[(x, y)];
    let fact: f64 = (1..k).map(|i| i as f64).product();
    Ok(fact * (g * c).powi(k as i32))
}

/// `μ(N_x) = λ_x G^{xx} - 1`.
pub fn mu_visits(e: &EnergyForm, x: usize) -> Result<f64, LoopError> {
    Ok(e.lambda()[x] * green(e)?.g[(x, x)] - 1.0)
}
