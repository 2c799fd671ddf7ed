use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex64;

use crate::EngineError;

/// `log det` and inverse of a symmetric positive definite matrix.
pub fn spd_inverse_logdet(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64), EngineError> {
    if m.nrows() == 0 {
        return Ok((DMatrix::zeros(0, 0), 0.0));
    }
    let ch = m.clone().cholesky().ok_or_else(|| EngineError::Singular("matrix is not positive definite".into()))?;
    let logdet = 2.0 * ch.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let mut inv = ch.inverse();
    symmetrize(&mut inv);
    Ok((inv, logdet))
}

pub fn spd_logdet(m: &DMatrix<f64>) -> Result<f64, EngineError> {
    if m.nrows() == 0 {
        return Ok(0.0);
    }
    let ch = m.clone().cholesky().ok_or_else(|| EngineError::Singular("matrix is not positive definite".into()))?;
    Ok(2.0 * ch.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>())
}

/// `log det` of a Hermitian positive definite complex matrix (a real number).
pub fn hermitian_logdet(m: &DMatrix<Complex64>) -> Result<f64, EngineError> {
    if m.nrows() == 0 {
        return Ok(0.0);
    }
    let ch = m
        .clone()
        .cholesky()
        .ok_or_else(|| EngineError::Singular("twisted matrix is not positive definite".into()))?;
    Ok(2.0 * ch.l_dirty().diagonal().iter().map(|d| d.real().ln()).sum::<f64>())
}

pub fn hermitian_inverse_logdet(m: &DMatrix<Complex64>) -> Result<(DMatrix<Complex64>, f64), EngineError> {
    let ch = m
        .clone()
        .cholesky()
        .ok_or_else(|| EngineError::Singular("twisted matrix is not positive definite".into()))?;
    let logdet = 2.0 * ch.l_dirty().diagonal().iter().map(|d| d.real().ln()).sum::<f64>();
    Ok((ch.inverse(), logdet))
}

/// Determinant through LU with partial pivoting (for general square matrices).
pub fn lu_det(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    m.clone().lu().determinant()
}

pub fn submatrix(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |a, b| m[(rows[a], cols[b])])
}

pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Largest |eigenvalue| of a symmetric matrix.
pub fn spectral_radius_sym(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.clone().symmetric_eigenvalues().iter().fold(0.0f64, |a, v| a.max(v.abs()))
}
