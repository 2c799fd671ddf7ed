use exact_engine::spectral_radius;
use graph_model::EnergyForm;
use loop_measure::{mu_nontrivial_total, tail_bound, PointedLoop};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, Poisson};
use serde::Serialize;

use crate::SampleError;

/// Relative length-law tail left out by the cap.
pub const LENGTH_TAIL_REL: f64 = 1e-12;
/// Bound on `k_cap · |X|²` stored matrix entries.
pub const POWER_STORAGE_LIMIT: f64 = 5e7;

/// Draws from the intensity draw `μ 1_{p>1} / μ(p>1)`, precomputing `P^k`
/// up to the length cap.
#[derive(Clone, Debug)]
pub struct LoopSampler {
    n: usize,
    p: DMatrix<f64>,
    powers: Vec<DMatrix<f64>>,
    /// `cum[k] = Σ_{j ≤ k} Tr(P^j)/j`
    cum: Vec<f64>,
    mu_total: f64,
    k_cap: usize,
    lambda: DVector<f64>,
}

pub fn draw_index<R: Rng + ?Sized>(rng: &mut R, w: &[f64]) -> usize {
    let total: f64 = w.iter().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &x) in w.iter().enumerate() {
        if x > 0.0 {
            acc += x;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

pub fn holding_time<R: Rng + ?Sized>(rng: &mut R, lambda: f64) -> f64 {
    let t: f64 = Exp1.sample(rng);
    // Exp1 can return exactly 0 with negligible probability
    t.max(f64::MIN_POSITIVE) / lambda
}

impl LoopSampler {
    /// `k_cap` is raised until the omitted length mass is below
    /// `LENGTH_TAIL_REL · μ(p>1)`.
    pub fn new(e: &EnergyForm, k_cap: Option<usize>) -> Result<Self, SampleError> {
        if !e.is_transient() {
            return Err(SampleError::Recurrent);
        }
        let mu_total = mu_nontrivial_total(e)?;
        if mu_total <= 0.0 {
            return Err(SampleError::NoLoops);
        }
        let n = e.len();
        let rho = spectral_radius(e);
        let mut cap = k_cap.unwrap_or(2).max(2);
        while tail_bound(n, rho, cap) >= LENGTH_TAIL_REL * mu_total {
            cap += 1;
            if cap as f64 * (n * n) as f64 > POWER_STORAGE_LIMIT {
                return Err(SampleError::Guard(format!("length cap {cap} too large for ρ = {rho}")));
            }
        }
        if cap as f64 * (n * n) as f64 > POWER_STORAGE_LIMIT {
            return Err(SampleError::Guard(format!("length cap {cap} too large")));
        }
        let p = e.transition();
        let mut powers = Vec::with_capacity(cap + 1);
        powers.push(DMatrix::identity(n, n));
        let mut cum = vec![0.0; cap + 1];
        for k in 1..=cap {
            let next = &powers[k - 1] * &p;
            cum[k] = cum[k - 1] + next.trace() / k as f64;
            powers.push(next);
        }
        Ok(Self { n, p, powers, cum, mu_total, k_cap: cap, lambda: e.lambda().clone() })
    }

    pub fn k_cap(&self) -> usize {
        self.k_cap
    }

    pub fn mu_total(&self) -> f64 {
        self.mu_total
    }

    /// `P(length = k)` under the sampler (the cap absorbs the tail).
    pub fn length_probability(&self, k: usize) -> f64 {
        if k == 0 || k > self.k_cap {
            return 0.0;
        }
        let mut w = self.cum[k] - self.cum[k - 1];
        if k == self.k_cap {
            w += self.mu_total - self.cum[k];
        }
        w / self.mu_total
    }

    fn draw_length<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u = rng.random::<f64>() * self.mu_total;
        // first k with cum[k] > u
        let k = self.cum.partition_point(|&c| c <= u);
        if k <= self.k_cap {
            return k;
        }
        (1..=self.k_cap).rev().find(|&k| self.powers[k].trace() > 0.0).unwrap_or(self.k_cap)
    }

    pub fn sample_discrete<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        let k = self.draw_length(rng);
        let diag: Vec<f64> = (0..self.n).map(|x| self.powers[k][(x, x)]).collect();
        let x1 = draw_index(rng, &diag);
        let mut verts = Vec::with_capacity(k);
        verts.push(x1);
        let mut cur = x1;
        let mut w = vec![0.0; self.n];
        for i in 1..k {
            let rem = &self.powers[k - i];
            for z in 0..self.n {
                w[z] = self.p[(cur, z)] * rem[(z, x1)];
            }
            cur = draw_index(rng, &w);
            verts.push(cur);
        }
        verts
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PointedLoop {
        let verts = self.sample_discrete(rng);
        let holding = verts.iter().map(|&x| holding_time(rng, self.lambda[x])).collect();
        PointedLoop { verts, holding }
    }

    pub fn soup<R: Rng + ?Sized>(&self, alpha: f64, rng: &mut R) -> Result<LoopEnsemble, SampleError> {
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(SampleError::Invalid(format!("α = {alpha}")));
        }
        let count = if alpha == 0.0 {
            0
        } else {
            let pois = Poisson::new(alpha * self.mu_total).map_err(|e| SampleError::Invalid(e.to_string()))?;
            let c: f64 = pois.sample(rng);
            c as usize
        };
        let loops = (0..count).map(|_| self.sample(rng)).collect();
        let trivial = trivial_occupation(&self.lambda, alpha, rng)?;
        Ok(LoopEnsemble { n: self.n, alpha, loops, trivial })
    }
}

/// Aggregated trivial loops: `t_x ~ Γ(shape α, scale 1/λ_x)`.
pub fn trivial_occupation<R: Rng + ?Sized>(lambda: &DVector<f64>, alpha: f64, rng: &mut R) -> Result<DVector<f64>, SampleError> {
    if alpha == 0.0 {
        return Ok(DVector::zeros(lambda.len()));
    }
    let mut t = DVector::zeros(lambda.len());
    for x in 0..lambda.len() {
        let g = Gamma::new(alpha, 1.0 / lambda[x]).map_err(|e| SampleError::Invalid(e.to_string()))?;
        t[x] = g.sample(rng);
    }
    Ok(t)
}

pub fn sample_pointed_loop<R: Rng + ?Sized>(e: &EnergyForm, rng: &mut R, k_cap: Option<usize>) -> Result<PointedLoop, SampleError> {
    Ok(LoopSampler::new(e, k_cap)?.sample(rng))
}

pub fn sample_loop_soup<R: Rng + ?Sized>(e: &EnergyForm, alpha: f64, rng: &mut R) -> Result<LoopEnsemble, SampleError> {
    if !e.is_transient() {
        return Err(SampleError::Recurrent);
    }
    if mu_nontrivial_total(e)? == 0.0 {
        let trivial = trivial_occupation(e.lambda(), alpha, rng)?;
        return Ok(LoopEnsemble { n: e.len(), alpha, loops: Vec::new(), trivial });
    }
    LoopSampler::new(e, None)?.soup(alpha, rng)
}

/// Nontrivial pointed loops plus the aggregated trivial occupation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LoopEnsemble {
    pub n: usize,
    pub alpha: f64,
    pub loops: Vec<PointedLoop>,
    pub trivial: DVector<f64>,
}

impl LoopEnsemble {
    pub fn empty(n: usize, alpha: f64) -> Self {
        Self { n, alpha, loops: Vec::new(), trivial: DVector::zeros(n) }
    }

    /// `L̂ = t + Σ l̂`.
    pub fn occupation(&self) -> DVector<f64> {
        let mut l = self.trivial.clone();
        for lp in &self.loops {
            lp.add_occupation(&mut l);
        }
        l
    }

    pub fn traversals(&self) -> DMatrix<u64> {
        let mut acc = DMatrix::zeros(self.n, self.n);
        for lp in &self.loops {
            lp.add_traversals(&mut acc);
        }
        acc
    }

    /// `N_x`, counting nontrivial loops only.
    pub fn visits(&self) -> Vec<u64> {
        let mut acc = vec![0; self.n];
        for lp in &self.loops {
            lp.add_visits(&mut acc);
        }
        acc
    }
}
