use exact_engine::{green, hitting_kernel, linalg::submatrix, log_det_i_minus_p_on};
use graph_model::{EnergyForm, VertexSubset};
use nalgebra::DMatrix;
use serde::Serialize;

use crate::LoopError;

pub const HIT_FAMILY_MAX: usize = 12;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct HitAvoid {
    /// `μ(p>1, loop ⊆ avoid^c, loop meets every target)`.
    pub mass: f64,
    /// `exp(-α · mass)`: no loop of `L_α` has the property.
    pub probability: f64,
}

fn check_universe(e: &EnergyForm, s: &VertexSubset) -> Result<(), LoopError> {
    if s.universe() != e.len() {
        return Err(LoopError::Invalid(format!("vertex set over {} points, graph has {}", s.universe(), e.len())));
    }
    Ok(())
}

/// Mass of nontrivial loops inside `avoid^c` that meet each set of `family`,
/// by inclusion–exclusion over sub-families:
/// `Σ_S (-1)^{|S|} μ^{W_S}(p>1)`, `W_S = avoid^c \ ∪_{i∈S} F_i`,
/// `μ^W(p>1) = -log det(I - P|_W)`. An empty family has mass 0.
pub fn mu_meet_all(e: &EnergyForm, family: &[VertexSubset], avoid: &VertexSubset) -> Result<f64, LoopError> {
    check_universe(e, avoid)?;
    for f in family {
        check_universe(e, f)?;
    }
    if family.is_empty() {
        return Ok(0.0);
    }
    if family.len() > HIT_FAMILY_MAX {
        return Err(LoopError::GuardExceeded(format!("{} target sets > {HIT_FAMILY_MAX}", family.len())));
    }
    if !e.is_transient() {
        return Err(exact_engine::EngineError::Recurrent.into());
    }
    let n = e.len();
    let base = avoid.mask();
    let mut total = 0.0;
    for s in 0u32..(1u32 << family.len()) {
        let mut keep: Vec<bool> = base.iter().map(|b| !b).collect();
        for (i, f) in family.iter().enumerate() {
            if s & (1 << i) != 0 {
                for &v in f.members() {
                    keep[v] = false;
                }
            }
        }
        let w: Vec<usize> = (0..n).filter(|&v| keep[v]).collect();
        let mu_w = -log_det_i_minus_p_on(e, &w)?;
        if s.count_ones() % 2 == 0 {
            total += mu_w;
        } else {
            total -= mu_w;
        }
    }
    if total < 0.0 && total > -1e-12 {
        total = 0.0;
    }
    Ok(total)
}

/// Loops avoiding `avoid` and visiting every vertex of `hit`.
pub fn mu_hit_avoid(e: &EnergyForm, hit: &VertexSubset, avoid: &VertexSubset, alpha: f64) -> Result<HitAvoid, LoopError> {
    check_universe(e, hit)?;
    check_universe(e, avoid)?;
    if let Some(&v) = hit.members().iter().find(|&&v| avoid.contains(v)) {
        return Err(LoopError::Overlap(e.name(v).into()));
    }
    let family: Vec<VertexSubset> = hit.members().iter().map(|&v| VertexSubset::singleton(e.len(), v)).collect();
    let mass = mu_meet_all(e, &family, avoid)?;
    Ok(HitAvoid { mass, probability: (-alpha * mass).exp() })
}

#[derive(Clone, Debug, Serialize)]
pub struct CrossHitting {
    pub k_max: usize,
    /// `Tr([H12 H21]^k)/k` for `k = 1..=k_max`.
    pub terms: Vec<f64>,
    pub partial: f64,
    /// `‖H12 H21‖_∞`.
    pub norm: f64,
    pub tail: f64,
    /// `log(det G|_{F1} det G|_{F2} / det G|_{F1∪F2})`.
    pub exact: f64,
}

/// `Σ_k Tr([H12 H21]^k)/k` where `H12` is the hitting distribution of `F2`
/// from points of `F1` and `H21` the reverse.
pub fn cross_hitting_series(e: &EnergyForm, f1: &VertexSubset, f2: &VertexSubset, k_max: usize) -> Result<CrossHitting, LoopError> {
    check_universe(e, f1)?;
    check_universe(e, f2)?;
    if f1.is_empty() || f2.is_empty() {
        return Err(LoopError::Empty);
    }
    if let Some(&v) = f1.members().iter().find(|&&v| f2.contains(v)) {
        return Err(LoopError::Overlap(e.name(v).into()));
    }
    let h2 = hitting_kernel(e, f2)?;
    let h1 = hitting_kernel(e, f1)?;
    let h12 = DMatrix::from_fn(f1.len(), f2.len(), |a, b| h2[(f1.members()[a], b)]);
    let h21 = DMatrix::from_fn(f2.len(), f1.len(), |a, b| h1[(f2.members()[a], b)]);
    let m = &h12 * &h21;
    let norm = (0..m.nrows()).map(|i| m.row(i).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let mut pow = DMatrix::identity(m.nrows(), m.nrows());
    let mut terms = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        pow = &pow * &m;
        terms.push(pow.trace() / k as f64);
    }
    let partial = terms.iter().sum();
    let k1 = (k_max + 1) as f64;
    let tail = if norm < 1.0 { f1.len() as f64 * norm.powf(k1) / (k1 * (1.0 - norm)) } else { f64::INFINITY };
    let g = green(e)?.g;
    let u = f1.union(f2);
    let ld = |s: &VertexSubset| submatrix(&g, s.members(), s.members()).determinant().ln();
    let exact = ld(f1) + ld(f2) - ld(&u);
    Ok(CrossHitting { k_max, terms, partial, norm, tail, exact })
}
