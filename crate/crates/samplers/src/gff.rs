use exact_engine::green;
use graph_model::EnergyForm;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::SampleError;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FieldSample {
    pub phi: Vec<f64>,
    /// Second independent copy for the complex field `φ + iφ'`.
    pub phi_im: Option<Vec<f64>>,
    pub covariance: String,
}

/// Centered Gaussian field with covariance `G`, `φ = L z` with `G = L Lᵀ`.
#[derive(Clone, Debug)]
pub struct GffSampler {
    l: DMatrix<f64>,
    g: DMatrix<f64>,
}

impl GffSampler {
    pub fn new(e: &EnergyForm) -> Result<Self, SampleError> {
        if !e.is_transient() {
            return Err(SampleError::Recurrent);
        }
        let g = green(e)?.g;
        Self::from_covariance(g)
    }

    pub fn from_covariance(g: DMatrix<f64>) -> Result<Self, SampleError> {
        let chol = g.clone().cholesky().ok_or_else(|| SampleError::Invalid("covariance is not positive definite".into()))?;
        Ok(Self { l: chol.l(), g })
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn sample_vec<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let n = self.l.nrows();
        let z = DVector::from_fn(n, |_, _| StandardNormal.sample(rng));
        &self.l * z
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, complex: bool) -> FieldSample {
        let phi = self.sample_vec(rng).as_slice().to_vec();
        let phi_im = complex.then(|| self.sample_vec(rng).as_slice().to_vec());
        FieldSample { phi, phi_im, covariance: "G".into() }
    }
}

pub fn sample_gff<R: Rng + ?Sized>(e: &EnergyForm, rng: &mut R, complex: bool) -> Result<FieldSample, SampleError> {
    Ok(GffSampler::new(e)?.sample(rng, complex))
}

/// Probabilists' Hermite polynomial `He_n`.
pub fn hermite_he(n: usize, x: f64) -> f64 {
    let (mut a, mut b) = (1.0, x);
    if n == 0 {
        return a;
    }
    for k in 1..n {
        let c = x * b - k as f64 * a;
        a = b;
        b = c;
    }
    b
}

/// Wick power `:φⁿ: = σⁿ He_n(φ/σ)` with `σ² = G^{xx}`.
pub fn wick_power(phi: f64, gxx: f64, n: usize) -> f64 {
    let s = gxx.sqrt();
    s.powi(n as i32) * hermite_he(n, phi / s)
}
