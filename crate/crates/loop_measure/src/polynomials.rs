use exact_engine::green;
use graph_model::EnergyForm;
use nalgebra::DMatrix;

use crate::permanent::alpha_permanent;
use crate::LoopError;

fn rising(a: f64, m: usize) -> f64 {
    (0..m).map(|i| a + i as f64).product()
}

fn factorial(m: usize) -> f64 {
    (1..=m).map(|i| i as f64).product()
}

/// Coefficients in `u` of `P_k^{α,σ}(u) = (-σ)^k L_k^{(α-1)}(u/σ)`:
/// `[u^j] = (-σ)^{k-j} (α+j)^{(k-j)} / ((k-j)! j!)`.
pub fn renorm_poly_coeffs(k: usize, sigma: f64, alpha: f64) -> Vec<f64> {
    (0..=k)
        .map(|j| {
            let sign = if (k - j) % 2 == 0 { 1.0 } else { -1.0 };
            sign * sigma.powi((k - j) as i32) * rising(alpha + j as f64, k - j) / (factorial(k - j) * factorial(j))
        })
        .collect()
}

pub fn renorm_poly_eval(k: usize, u: f64, sigma: f64, alpha: f64) -> f64 {
    renorm_poly_coeffs(k, sigma, alpha).iter().rev().fold(0.0, |acc, &c| acc * u + c)
}

/// `Q_k^{α,σ}(u) = P_k^{α,σ}(u + ασ)` through
/// `n Q_n = (u - 2σ(n-1)) Q_{n-1} - σ²(α+n-2) Q_{n-2}`.
pub fn renorm_poly_recurrence(k: usize, u: f64, sigma: f64, alpha: f64) -> f64 {
    let (mut q0, mut q1) = (1.0, u);
    if k == 0 {
        return q0;
    }
    for n in 2..=k {
        let nf = n as f64;
        let q2 = ((u - 2.0 * sigma * (nf - 1.0)) * q1 - sigma * sigma * (alpha + nf - 2.0) * q0) / nf;
        q0 = q1;
        q1 = q2;
    }
    q1
}

/// `δ_{kl} (G^{xy})^{2k} α(α+1)…(α+k-1)/k!`.
pub fn orth_exact(gxy: f64, alpha: f64, k: usize, l: usize) -> f64 {
    if k != l {
        return 0.0;
    }
    gxy.powi(2 * k as i32) * rising(alpha, k) / factorial(k)
}

/// `E[P_k(L̂^x) P_l(L̂^y)]` expanded into raw moments, each an α-permanent.
pub fn orth_from_moments(e: &EnergyForm, alpha: f64, x: usize, y: usize, k: usize, l: usize) -> Result<f64, LoopError> {
    let g = green(e)?.g;
    let a = renorm_poly_coeffs(k, g[(x, x)], alpha);
    let b = renorm_poly_coeffs(l, g[(y, y)], alpha);
    let mut total = 0.0;
    for (i, ai) in a.iter().enumerate() {
        for (j, bj) in b.iter().enumerate() {
            let pts: Vec<usize> = std::iter::repeat_n(x, i).chain(std::iter::repeat_n(y, j)).collect();
            let m = DMatrix::from_fn(pts.len(), pts.len(), |r, c| g[(pts[r], pts[c])]);
            total += ai * bj * alpha_permanent(&m, alpha, false)?;
        }
    }
    Ok(total)
}
