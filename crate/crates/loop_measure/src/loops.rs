use exact_engine::green;
use graph_model::EnergyForm;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::LoopError;

/// A loop: a cyclic vertex sequence up to rotation, stored as its
/// lexicographically least rotation.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DiscreteLoop {
    verts: Vec<usize>,
}

fn least_rotation(v: &[usize]) -> usize {
    let p = v.len();
    let mut best = 0;
    for s in 1..p {
        for k in 0..p {
            let a = v[(s + k) % p];
            let b = v[(best + k) % p];
            if a != b {
                if a < b {
                    best = s;
                }
                break;
            }
        }
    }
    best
}

impl DiscreteLoop {
    pub fn new(verts: Vec<usize>) -> Result<Self, LoopError> {
        if verts.is_empty() {
            return Err(LoopError::Empty);
        }
        let s = least_rotation(&verts);
        let mut v = verts;
        v.rotate_left(s);
        Ok(Self { verts: v })
    }

    /// Wraps a sequence already known to be canonical.
    pub(crate) fn from_canonical(verts: Vec<usize>) -> Self {
        Self { verts }
    }

    pub fn is_canonical(verts: &[usize]) -> bool {
        !verts.is_empty() && least_rotation(verts) == 0
    }

    pub fn vertices(&self) -> &[usize] {
        &self.verts
    }

    pub fn len(&self) -> usize {
        self.verts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.verts.is_empty()
    }

    pub fn is_trivial(&self) -> bool {
        self.verts.len() == 1
    }

    /// Smallest `d` with the sequence invariant under rotation by `d`.
    pub fn minimal_period(&self) -> usize {
        let p = self.verts.len();
        (1..=p)
            .find(|&d| p % d == 0 && (0..p).all(|i| self.verts[i] == self.verts[(i + d) % p]))
            .unwrap_or(p)
    }

    /// Rotational symmetry order `p / minimal_period`.
    pub fn multiplicity(&self) -> usize {
        self.verts.len() / self.minimal_period()
    }

    /// `N_x`; zero everywhere for a trivial loop.
    pub fn visits(&self, n: usize) -> Vec<usize> {
        let mut out = vec![0; n];
        if !self.is_trivial() {
            for &x in &self.verts {
                out[x] += 1;
            }
        }
        out
    }

    /// `N_{x,y}` as a dense matrix.
    pub fn traversals(&self, n: usize) -> DMatrix<u32> {
        let mut out = DMatrix::zeros(n, n);
        let p = self.verts.len();
        if p > 1 {
            for i in 0..p {
                out[(self.verts[i], self.verts[(i + 1) % p])] += 1;
            }
        }
        out
    }

    pub fn label(&self, e: &EnergyForm) -> String {
        let names: Vec<&str> = self.verts.iter().map(|&v| e.name(v)).collect();
        format!("({})", names.join(","))
    }
}

/// A based loop with rescaled holding times `τ̂_i = τ_i / λ_{ξ_i}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointedLoop {
    pub verts: Vec<usize>,
    pub holding: Vec<f64>,
}

impl PointedLoop {
    pub fn new(verts: Vec<usize>, holding: Vec<f64>) -> Result<Self, LoopError> {
        if verts.is_empty() {
            return Err(LoopError::Empty);
        }
        if verts.len() != holding.len() {
            return Err(LoopError::Invalid(format!("{} vertices but {} holding times", verts.len(), holding.len())));
        }
        if holding.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
            return Err(LoopError::Invalid("holding times must be positive and finite".into()));
        }
        Ok(Self { verts, holding })
    }

    pub fn len(&self) -> usize {
        self.verts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.verts.is_empty()
    }

    pub fn discrete(&self) -> DiscreteLoop {
        DiscreteLoop::new(self.verts.clone()).expect("nonempty")
    }

    /// `l̂^x = Σ_{ξ_i = x} τ̂_i`.
    pub fn occupation(&self, n: usize) -> DVector<f64> {
        let mut l = DVector::zeros(n);
        self.add_occupation(&mut l);
        l
    }

    pub fn add_occupation(&self, l: &mut DVector<f64>) {
        for (&x, &t) in self.verts.iter().zip(&self.holding) {
            l[x] += t;
        }
    }

    /// Adds `N_{x,y}` to `acc` (nothing for a one-point loop).
    pub fn add_traversals(&self, acc: &mut DMatrix<u64>) {
        let p = self.verts.len();
        if p > 1 {
            for i in 0..p {
                acc[(self.verts[i], self.verts[(i + 1) % p])] += 1;
            }
        }
    }

    pub fn add_visits(&self, acc: &mut [u64]) {
        if self.verts.len() > 1 {
            for &x in &self.verts {
                acc[x] += 1;
            }
        }
    }
}

/// `μ(ξ) = ∏ P^{ξ_i}_{ξ_{i+1}} / r` with `r` the rotational symmetry order.
pub fn mu_discrete(e: &EnergyForm, lp: &DiscreteLoop) -> Result<f64, LoopError> {
    let v = lp.vertices();
    if v.len() == 1 {
        return Err(LoopError::Trivial);
    }
    let lam = e.lambda();
    let mut prod = 1.0;
    for i in 0..v.len() {
        let (a, b) = (v[i], v[(i + 1) % v.len()]);
        let c = if a == b { 0.0 } else { e.c(a, b) };
        if c <= 0.0 {
            return Err(LoopError::ZeroStep(e.name(a).into(), e.name(b).into()));
        }
        prod *= c / lam[a];
    }
    Ok(prod / lp.multiplicity() as f64)
}

/// `μ(p > 1) = -log det(I - P)`, cross-checked against `log(det G ∏λ)`.
pub fn mu_nontrivial_total(e: &EnergyForm) -> Result<f64, LoopError> {
    let b = green(e)?;
    let a = b.mu_nontrivial();
    let c = b.mu_nontrivial_from_g(e);
    if (a - c).abs() > 1e-9 * (1.0 + a.abs()) {
        return Err(LoopError::Inconsistent(format!("-log det(I-P) = {a} but log(det G ∏λ) = {c}")));
    }
    Ok(a)
}
