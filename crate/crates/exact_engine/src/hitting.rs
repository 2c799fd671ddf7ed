use graph_model::{EnergyForm, VertexSubset};
use nalgebra::{DMatrix, DVector};

use crate::green::{energy, green_on};
use crate::EngineError;

/// Balayage kernel `[H^F]^x_y = P_x(X_{T_F} = y)`; rows are all vertices,
/// columns follow `f.members()`.
pub fn hitting_kernel(e: &EnergyForm, f: &VertexSubset) -> Result<DMatrix<f64>, EngineError> {
    if f.is_empty() {
        return Err(EngineError::EmptySet);
    }
    let fi = f.members();
    let mut h = DMatrix::zeros(e.len(), fi.len());
    for (b, &y) in fi.iter().enumerate() {
        h[(y, b)] = 1.0;
    }
    let d = f.complement();
    if d.is_empty() {
        return Ok(h);
    }
    let di = d.members();
    let (gd, _) = green_on(e, &d)?;
    let c = e.conductance();
    for (a, &x) in di.iter().enumerate() {
        for (col, &y) in fi.iter().enumerate() {
            h[(x, col)] = (0..di.len()).map(|bb| gd[(a, bb)] * c[(di[bb], y)]).sum();
        }
    }
    Ok(h)
}

/// `Cap(F) = <κ H^F 1> = e(H^F 1, H^F 1)`.
pub fn capacity(e: &EnergyForm, f: &VertexSubset) -> Result<f64, EngineError> {
    let (bal, en) = capacity_both(e, f)?;
    if (bal - en).abs() > 1e-9 * (1.0 + bal.abs()) {
        return Err(EngineError::Inconsistent(format!("capacity {bal} vs energy {en}")));
    }
    Ok(bal)
}

/// Both capacity formulas: balayage mass and capacitary energy.
pub fn capacity_both(e: &EnergyForm, f: &VertexSubset) -> Result<(f64, f64), EngineError> {
    if !e.is_transient() {
        return Err(EngineError::Recurrent);
    }
    let h = hitting_kernel(e, f)?;
    let h1: DVector<f64> = DVector::from_fn(e.len(), |x, _| h.row(x).sum());
    Ok((e.killing().dot(&h1), energy(e, &h1, &h1)))
}
