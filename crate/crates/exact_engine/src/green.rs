use graph_model::{EnergyForm, VertexSubset};
use nalgebra::{DMatrix, DVector};

use crate::linalg::{spd_inverse_logdet, spd_logdet, spectral_radius_sym, submatrix};
use crate::EngineError;

#[derive(Clone, Debug)]
pub struct GreenBundle {
    /// `G = (M_λ - C)^{-1}`.
    pub g: DMatrix<f64>,
    pub log_det_g: f64,
    /// `log det(I - P)`, evaluated through the symmetric form
    /// `I - M_λ^{-1/2} C M_λ^{-1/2}` independently of `G`.
    pub log_det_i_minus_p: f64,
    /// Stored perturbation `(χ, G_χ)` when built with [`GreenBundle::with_chi`].
    pub chi: Option<(DVector<f64>, DMatrix<f64>)>,
}

impl GreenBundle {
    pub fn det_g(&self) -> f64 {
        self.log_det_g.exp()
    }

    /// `μ(p > 1) = -log det(I - P)`.
    pub fn mu_nontrivial(&self) -> f64 {
        -self.log_det_i_minus_p
    }

    /// `log(det G · ∏λ)`, which should equal [`Self::mu_nontrivial`].
    pub fn mu_nontrivial_from_g(&self, e: &EnergyForm) -> f64 {
        self.log_det_g + e.lambda().iter().map(|l| l.ln()).sum::<f64>()
    }

    /// Potential kernel `V = (I - P)^{-1} = G M_λ`.
    pub fn potential(&self, e: &EnergyForm) -> DMatrix<f64> {
        let mut v = self.g.clone();
        for j in 0..e.len() {
            v.column_mut(j).scale_mut(e.lambda()[j]);
        }
        v
    }

    pub fn with_chi(mut self, e: &EnergyForm, chi: &DVector<f64>) -> Result<Self, EngineError> {
        let gc = green_chi(e, chi)?;
        self.chi = Some((chi.clone(), gc));
        Ok(self)
    }
}

pub fn green(e: &EnergyForm) -> Result<GreenBundle, EngineError> {
    if !e.is_transient() {
        return Err(EngineError::Recurrent);
    }
    let (g, log_det_lap) = spd_inverse_logdet(&e.laplacian())?;
    Ok(GreenBundle { g, log_det_g: -log_det_lap, log_det_i_minus_p: log_det_i_minus_p(e)?, chi: None })
}

/// `M_λ^{-1/2} C M_λ^{-1/2}`, similar to `P`.
pub fn symmetrized_transition(e: &EnergyForm) -> DMatrix<f64> {
    let s: Vec<f64> = e.lambda().iter().map(|l| l.sqrt()).collect();
    let c = e.conductance();
    DMatrix::from_fn(e.len(), e.len(), |i, j| c[(i, j)] / (s[i] * s[j]))
}

fn log_det_i_minus_p(e: &EnergyForm) -> Result<f64, EngineError> {
    let s = symmetrized_transition(e);
    spd_logdet(&(DMatrix::identity(e.len(), e.len()) - s))
}

/// Spectral radius of `P` (its norm on `L²(λ)`).
pub fn spectral_radius(e: &EnergyForm) -> f64 {
    spectral_radius_sym(&symmetrized_transition(e))
}

/// `log det(I - P|_W)` for the chain killed outside `w` (0 for empty `w`).
pub fn log_det_i_minus_p_on(e: &EnergyForm, w: &[usize]) -> Result<f64, EngineError> {
    if w.is_empty() {
        return Ok(0.0);
    }
    let lap = submatrix(&e.laplacian(), w, w);
    let log_lambda: f64 = w.iter().map(|&x| e.lambda()[x].ln()).sum();
    Ok(spd_logdet(&lap)? - log_lambda)
}

/// Green function of the chain killed outside `d`, indexed by `d`.
pub fn green_on(e: &EnergyForm, d: &VertexSubset) -> Result<(DMatrix<f64>, f64), EngineError> {
    let idx = d.members();
    let (g, ld) = spd_inverse_logdet(&submatrix(&e.laplacian(), idx, idx))?;
    Ok((g, -ld))
}

pub fn green_chi(e: &EnergyForm, chi: &DVector<f64>) -> Result<DMatrix<f64>, EngineError> {
    check_measure(e, chi)?;
    if !e.is_transient() && chi.iter().all(|&c| c == 0.0) {
        return Err(EngineError::Recurrent);
    }
    let mut m = e.laplacian();
    for i in 0..e.len() {
        m[(i, i)] += chi[i];
    }
    Ok(spd_inverse_logdet(&m)?.0)
}

/// `log det G_χ`.
pub fn log_det_green_chi(e: &EnergyForm, chi: &DVector<f64>) -> Result<f64, EngineError> {
    check_measure(e, chi)?;
    let mut m = e.laplacian();
    for i in 0..e.len() {
        m[(i, i)] += chi[i];
    }
    Ok(-spd_logdet(&m)?)
}

pub(crate) fn check_measure(e: &EnergyForm, chi: &DVector<f64>) -> Result<(), EngineError> {
    if chi.len() != e.len() {
        return Err(EngineError::Mismatch(format!("measure has {} entries for {} vertices", chi.len(), e.len())));
    }
    for i in 0..e.len() {
        if !(chi[i] >= 0.0) {
            return Err(EngineError::NegativeMeasure(e.name(i).to_string()));
        }
    }
    Ok(())
}

/// Green function of the chain killed at `root`, extended by zero on the
/// root row and column.
pub fn rooted_green(e: &EnergyForm, root: usize) -> Result<DMatrix<f64>, EngineError> {
    let n = e.len();
    if root >= n {
        return Err(EngineError::Mismatch(format!("root {root} out of range")));
    }
    let rest: Vec<usize> = (0..n).filter(|&i| i != root).collect();
    let (g, _) = spd_inverse_logdet(&submatrix(&e.laplacian(), &rest, &rest))?;
    let mut out = DMatrix::zeros(n, n);
    for (a, &i) in rest.iter().enumerate() {
        for (b, &j) in rest.iter().enumerate() {
            out[(i, j)] = g[(a, b)];
        }
    }
    Ok(out)
}

/// `log Z⁰ = log det` of the Green function killed at `root`.
pub fn rooted_log_partition(e: &EnergyForm, root: usize) -> Result<f64, EngineError> {
    let rest: Vec<usize> = (0..e.len()).filter(|&i| i != root).collect();
    Ok(-spd_logdet(&submatrix(&e.laplacian(), &rest, &rest))?)
}

/// Potential of a zero-charge measure on a recurrent chain, normalized so
/// that `<Gν, λ> = 0`.
pub fn recurrent_green(e: &EnergyForm, nu: &DVector<f64>) -> Result<DVector<f64>, EngineError> {
    if e.is_transient() {
        return Err(EngineError::Transient);
    }
    if nu.len() != e.len() {
        return Err(EngineError::Mismatch("measure length".into()));
    }
    let total: f64 = nu.iter().sum();
    let scale = nu.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
    if total.abs() > 1e-12 * scale {
        return Err(EngineError::NonzeroCharge(total));
    }
    let f = rooted_green(e, 0)? * nu;
    let shift = f.dot(e.lambda()) / e.lambda().sum();
    Ok(f.map(|v| v - shift))
}

/// `e(f, g) = Σ κ f g + ½ Σ C (f_x - f_y)(g_x - g_y) = fᵀ(M_λ - C)g`.
pub fn energy(e: &EnergyForm, f: &DVector<f64>, g: &DVector<f64>) -> f64 {
    f.dot(&(e.laplacian() * g))
}
