use graph_model::EnergyForm;
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::green::green;
use crate::linalg::{hermitian_inverse_logdet, hermitian_logdet};
use crate::EngineError;

/// Real antisymmetric function on oriented edges, stored densely.
#[derive(Clone, Debug, PartialEq)]
pub struct OneForm(DMatrix<f64>);

impl OneForm {
    pub fn zero(n: usize) -> Self {
        Self(DMatrix::zeros(n, n))
    }

    pub fn new(m: DMatrix<f64>) -> Result<Self, EngineError> {
        if m.nrows() != m.ncols() {
            return Err(EngineError::Mismatch("one-form must be square".into()));
        }
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if (m[(i, j)] + m[(j, i)]).abs() > 1e-12 * (1.0 + m[(i, j)].abs()) {
                    return Err(EngineError::NotAntisymmetric(i, j));
                }
            }
        }
        Ok(Self(m))
    }

    /// `ω^{x,y} = w`, `ω^{y,x} = -w` for each listed oriented edge.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Self {
        let mut m = DMatrix::zeros(n, n);
        for &(x, y, w) in edges {
            m[(x, y)] = w;
            m[(y, x)] = -w;
        }
        Self(m)
    }

    /// `(dg)^{x,y} = g_y - g_x`.
    pub fn gradient(g: &[f64]) -> Self {
        let n = g.len();
        Self(DMatrix::from_fn(n, n, |x, y| g[y] - g[x]))
    }

    pub fn add(&self, other: &OneForm) -> OneForm {
        OneForm(&self.0 + &other.0)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.0[(x, y)]
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }
}

/// `M_λ - C ∘ e^{iω}` (Hermitian).
pub fn twisted_operator(e: &EnergyForm, omega: &OneForm) -> Result<DMatrix<Complex64>, EngineError> {
    if omega.0.nrows() != e.len() {
        return Err(EngineError::Mismatch("one-form size".into()));
    }
    let c = e.conductance();
    Ok(DMatrix::from_fn(e.len(), e.len(), |x, y| {
        if x == y {
            Complex64::new(e.lambda()[x], 0.0)
        } else {
            -Complex64::from_polar(c[(x, y)], omega.0[(x, y)])
        }
    }))
}

#[derive(Clone, Debug)]
pub struct TwistedGreen {
    /// `G^{(ω)} = (M_λ - C e^{iω})^{-1}`.
    pub g: DMatrix<Complex64>,
    /// `log Z_{e,ω} = log det G^{(ω)}`; real because the operator is
    /// Hermitian positive definite.
    pub log_z: f64,
}

pub fn twisted_green(e: &EnergyForm, omega: &OneForm) -> Result<TwistedGreen, EngineError> {
    if !e.is_transient() {
        return Err(EngineError::Recurrent);
    }
    let (g, ld) = hermitian_inverse_logdet(&twisted_operator(e, omega)?)?;
    Ok(TwistedGreen { g, log_z: -ld })
}

pub fn log_partition_twisted(e: &EnergyForm, omega: &OneForm) -> Result<f64, EngineError> {
    Ok(-hermitian_logdet(&twisted_operator(e, omega)?)?)
}

/// `(Z_{e',ω} / Z_e)^α`, evaluated as `exp(α (log Z_{e',ω} - log Z_e))`.
pub fn partition_ratio(e: &EnergyForm, e2: &EnergyForm, omega: &OneForm, alpha: f64) -> Result<Complex64, EngineError> {
    if e.names() != e2.names() {
        return Err(EngineError::Mismatch("energy forms live on different vertex sets".into()));
    }
    for (i, j, _) in e2.edges() {
        if e.c(i, j) == 0.0 {
            return Err(EngineError::Mismatch(format!("edge {}-{} is not an edge of e", e.name(i), e.name(j))));
        }
    }
    let base = green(e)?.log_det_g;
    let twisted = log_partition_twisted(e2, omega)?;
    Ok(Complex64::new((alpha * (twisted - base)).exp(), 0.0))
}
