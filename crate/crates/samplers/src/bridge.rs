use exact_engine::green;
use graph_model::EnergyForm;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use crate::loops::{draw_index, holding_time};
use crate::SampleError;

pub const BRIDGE_STEP_LIMIT: usize = 10_000_000;

/// An open path `x = γ_0, …, γ_m = y` with a holding time at each position.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Bridge {
    pub verts: Vec<usize>,
    pub holding: Vec<f64>,
}

impl Bridge {
    pub fn occupation(&self, n: usize) -> DVector<f64> {
        let mut l = DVector::zeros(n);
        for (&x, &t) in self.verts.iter().zip(&self.holding) {
            l[x] += t;
        }
        l
    }
}

/// Bridges of `μ^{x,y}/G^{x,y}` via the potential `V = G M_λ`
/// (`V^u_y = δ_{uy} + Σ_z P^u_z V^z_y`).
#[derive(Clone, Debug)]
pub struct BridgeSampler {
    p: DMatrix<f64>,
    v: DMatrix<f64>,
    lambda: DVector<f64>,
}

impl BridgeSampler {
    pub fn new(e: &EnergyForm) -> Result<Self, SampleError> {
        if !e.is_transient() {
            return Err(SampleError::Recurrent);
        }
        let b = green(e)?;
        Ok(Self { p: e.transition(), v: b.potential(e), lambda: e.lambda().clone() })
    }

    pub fn potential(&self) -> &DMatrix<f64> {
        &self.v
    }

    /// At `u = y` stop with probability `1/V^y_y`; otherwise move to `z`
    /// with probability `P^u_z V^z_y / V^u_y`.
    pub fn sample<R: Rng + ?Sized>(&self, x: usize, y: usize, rng: &mut R) -> Result<Bridge, SampleError> {
        let n = self.p.nrows();
        if x >= n || y >= n {
            return Err(SampleError::Invalid("bridge endpoint out of range".into()));
        }
        if !(self.v[(x, y)] > 0.0) {
            return Err(SampleError::Unreachable(x, y));
        }
        let mut verts = vec![x];
        let mut cur = x;
        let mut w = vec![0.0; n];
        loop {
            if cur == y && rng.random::<f64>() * self.v[(y, y)] < 1.0 {
                break;
            }
            for z in 0..n {
                w[z] = self.p[(cur, z)] * self.v[(z, y)];
            }
            cur = draw_index(rng, &w);
            verts.push(cur);
            if verts.len() > BRIDGE_STEP_LIMIT {
                return Err(SampleError::Guard("bridge step limit".into()));
            }
        }
        let holding = verts.iter().map(|&u| holding_time(rng, self.lambda[u])).collect();
        Ok(Bridge { verts, holding })
    }
}

pub fn sample_bridge<R: Rng + ?Sized>(e: &EnergyForm, x: usize, y: usize, rng: &mut R) -> Result<Bridge, SampleError> {
    BridgeSampler::new(e)?.sample(x, y, rng)
}
