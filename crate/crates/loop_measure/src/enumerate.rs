use exact_engine::{linalg::spd_logdet, spectral_radius, symmetrized_transition};
use graph_model::{build_wreath, EnergyForm};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::loops::{mu_nontrivial_total, DiscreteLoop};
use crate::LoopError;

#[derive(Clone, Copy, Debug)]
pub struct EnumerationGuard {
    pub max_vertices: usize,
    pub max_length: usize,
    /// Upper estimate of DFS leaves, `|X| · (d_max - 1)^{k_max - 1} · d_max`.
    pub max_work: f64,
}

impl Default for EnumerationGuard {
    fn default() -> Self {
        Self { max_vertices: 8, max_length: 14, max_work: 2e9 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Enumeration {
    pub k_max: usize,
    /// Canonical loops with `2 ≤ p ≤ k_max`, grouped by starting vertex.
    pub loops: Vec<(DiscreteLoop, f64)>,
    pub total: f64,
    /// Upper bound on the omitted mass `Σ_{k > k_max} Tr(P^k)/k`.
    pub tail: f64,
    pub rho: f64,
}

impl Enumeration {
    /// `Σ μ(ξ) w(ξ)` over the enumerated loops.
    pub fn weighted_sum(&self, w: impl Fn(&DiscreteLoop) -> f64) -> f64 {
        self.loops.iter().map(|(l, m)| m * w(l)).sum()
    }

    /// Mass by length; index `k` holds loops of length `k`.
    pub fn by_length(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.k_max + 1];
        for (l, m) in &self.loops {
            out[l.len()] += m;
        }
        out
    }
}

/// `|X| ρ^{k+1} / ((k+1)(1-ρ))`, infinite when `ρ ≥ 1`.
pub fn tail_bound(n: usize, rho: f64, k_max: usize) -> f64 {
    if rho <= 0.0 {
        return 0.0;
    }
    if rho >= 1.0 {
        return f64::INFINITY;
    }
    let k1 = (k_max + 1) as f64;
    n as f64 * rho.powf(k1) / (k1 * (1.0 - rho))
}

pub fn enumerate_loops(e: &EnergyForm, k_max: usize) -> Result<Enumeration, LoopError> {
    enumerate_loops_with_guard(e, k_max, EnumerationGuard::default())
}

pub fn enumerate_loops_with_guard(e: &EnergyForm, k_max: usize, guard: EnumerationGuard) -> Result<Enumeration, LoopError> {
    let n = e.len();
    if n > guard.max_vertices {
        return Err(LoopError::GuardExceeded(format!("|X| = {n} > {}", guard.max_vertices)));
    }
    if k_max > guard.max_length {
        return Err(LoopError::GuardExceeded(format!("k_max = {k_max} > {}", guard.max_length)));
    }
    let dmax = (0..n).map(|i| e.degree(i)).max().unwrap_or(0) as f64;
    let work = n as f64 * dmax * (dmax - 1.0).max(1.0).powi(k_max.saturating_sub(1) as i32);
    if work > guard.max_work {
        return Err(LoopError::GuardExceeded(format!("enumeration work {work:.3e} > {:.3e}", guard.max_work)));
    }
    let p = e.transition();
    let nbrs: Vec<Vec<usize>> = (0..n).map(|x| e.neighbors(x).map(|(y, _)| y).collect()).collect();
    let per_start: Vec<Vec<(DiscreteLoop, f64)>> = (0..n)
        .into_par_iter()
        .map(|s| {
            let mut out = Vec::new();
            let mut path = vec![s];
            dfs(&p, &nbrs, s, k_max, &mut path, 1.0, &mut out);
            out
        })
        .collect();
    let loops: Vec<(DiscreteLoop, f64)> = per_start.into_iter().flatten().collect();
    let total = loops.iter().map(|(_, m)| m).sum();
    let rho = spectral_radius(e);
    Ok(Enumeration { k_max, loops, total, tail: tail_bound(n, rho, k_max), rho })
}

fn dfs(
    p: &DMatrix<f64>,
    nbrs: &[Vec<usize>],
    s: usize,
    k_max: usize,
    path: &mut Vec<usize>,
    w: f64,
    out: &mut Vec<(DiscreteLoop, f64)>,
) {
    let cur = *path.last().unwrap();
    let len = path.len();
    if len >= 2 && nbrs[cur].contains(&s) && DiscreteLoop::is_canonical(path) {
        let l = DiscreteLoop::from_canonical(path.clone());
        let m = w * p[(cur, s)] / l.multiplicity() as f64;
        out.push((l, m));
    }
    if len == k_max {
        return;
    }
    for &y in &nbrs[cur] {
        if y < s {
            continue;
        }
        path.push(y);
        dfs(p, nbrs, s, k_max, path, w * p[(cur, y)], out);
        path.pop();
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EulerCheck {
    pub s: f64,
    /// `Σ_{p ≤ k_max} s^p μ(ξ)` over enumerated loops.
    pub log_partial: f64,
    /// `-log det(I - sP)`.
    pub log_exact: f64,
    pub tail: f64,
}

pub fn euler_product_check(e: &EnergyForm, s: f64, k_max: usize) -> Result<EulerCheck, LoopError> {
    let en = enumerate_loops(e, k_max)?;
    let rho = en.rho;
    if !(s >= 0.0 && s * rho < 1.0) {
        return Err(LoopError::Invalid(format!("s = {s} outside [0, 1/ρ)")));
    }
    let log_partial = en.weighted_sum(|l| s.powi(l.len() as i32));
    let sp = symmetrized_transition(e);
    let n = e.len();
    let m = DMatrix::identity(n, n) - sp.scale(s);
    let log_exact = -spd_logdet(&m)?;
    Ok(EulerCheck { s, log_partial, log_exact, tail: tail_bound(n, s * rho, k_max) })
}

#[derive(Clone, Debug, Serialize)]
pub struct WreathCheck {
    pub fibres: Vec<usize>,
    /// `∏ n_x · Σ_{enumerated} ∏_{N_x > 0} n_x^{-1} μ(ξ)`.
    pub enumerated: f64,
    /// `-log det(I - P̃)` on the wreath chain.
    pub exact: f64,
    pub tail: f64,
}

pub fn wreath_check(e: &EnergyForm, fibres: &[usize], k_max: usize) -> Result<WreathCheck, LoopError> {
    let w = build_wreath(e, fibres)?;
    let exact = mu_nontrivial_total(&w)?;
    let en = enumerate_loops(e, k_max)?;
    let prod: f64 = fibres.iter().map(|&k| k as f64).product();
    let n = e.len();
    let enumerated = prod
        * en.weighted_sum(|l| {
            l.visits(n)
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(x, _)| 1.0 / fibres[x] as f64)
                .product()
        });
    // each omitted loop visits at least two distinct vertices
    let mut sorted = fibres.to_vec();
    sorted.sort_unstable();
    let shrink = if sorted.len() >= 2 { (sorted[0] * sorted[1]) as f64 } else { 1.0 };
    Ok(WreathCheck { fibres: fibres.to_vec(), enumerated, exact, tail: prod / shrink * en.tail })
}
