use std::collections::HashMap;
use std::time::Instant;

use exact_engine::{green, linalg::submatrix, Node, Root};
use graph_model::EnergyForm;
use samplers::{lerw, loop_erase, BridgeSampler};

use super::{label, require_transient};
use crate::stats::{proportion, total_variation};
use crate::{draw_many, purpose, timed, Check, VerificationReport, VerifyError, TOL_LINALG};

pub const PATH_LIMIT: usize = 1_000_000;
pub const TV_GATE: f64 = 0.01;

/// Self-avoiding paths from `x` to `y` (just `[x]` when `x = y`).
pub fn self_avoiding_paths(e: &EnergyForm, x: usize, y: usize) -> Result<Vec<Vec<usize>>, VerifyError> {
    let mut out = Vec::new();
    let mut path = vec![x];
    let mut on = vec![false; e.len()];
    on[x] = true;
    fn rec(
        e: &EnergyForm,
        y: usize,
        path: &mut Vec<usize>,
        on: &mut [bool],
        out: &mut Vec<Vec<usize>>,
    ) -> Result<(), VerifyError> {
        let cur = *path.last().unwrap();
        if cur == y {
            out.push(path.clone());
            if out.len() > PATH_LIMIT {
                return Err(VerifyError::Precondition(format!("more than {PATH_LIMIT} self-avoiding paths")));
            }
            return Ok(());
        }
        let nbrs: Vec<usize> = e.neighbors(cur).map(|(v, _)| v).collect();
        for v in nbrs {
            if !on[v] {
                on[v] = true;
                path.push(v);
                rec(e, y, path, on, out)?;
                path.pop();
                on[v] = false;
            }
        }
        Ok(())
    }
    rec(e, y, &mut path, &mut on, &mut out)?;
    Ok(out)
}

/// `∏ C_{η_i η_{i+1}} · det(G|_{η×η})`.
fn be_mass(e: &EnergyForm, g: &nalgebra::DMatrix<f64>, path: &[usize], last_step: f64) -> f64 {
    let c: f64 = path.windows(2).map(|w| e.c(w[0], w[1])).product();
    c * last_step * submatrix(g, path, path).determinant()
}

/// Law of the loop-erased bridge and of the loop-erased walk killed at `Δ`.
pub fn verify_loop_erasure(e: &EnergyForm, fixture: &str, x: usize, y: usize, n: usize, seed: u64) -> Result<VerificationReport, VerifyError> {
    let start = Instant::now();
    require_transient(e)?;
    if x >= e.len() || y >= e.len() {
        return Err(VerifyError::Precondition("endpoint out of range".into()));
    }
    let g = green(e)?.g;
    let mut r = VerificationReport::new("loop_erasure", fixture, n, seed);
    let paths = self_avoiding_paths(e, x, y)?;
    let masses: Vec<f64> = paths.iter().map(|p| be_mass(e, &g, p, 1.0)).collect();
    let total: f64 = masses.iter().sum();
    r.push(Check::relative("be_mass_total_vs_green", g[(x, y)], total, TOL_LINALG));
    let law: Vec<f64> = masses.iter().map(|m| m / g[(x, y)]).collect();

    let kx = e.killing()[x];
    let killed_exact = kx * g[(x, x)];
    let mut killed_paths: Vec<(Vec<usize>, f64)> = Vec::new();
    if kx > 0.0 || e.killing().iter().any(|&k| k > 0.0) {
        for z in 0..e.len() {
            if e.killing()[z] > 0.0 {
                for p in self_avoiding_paths(e, x, z)? {
                    let m = be_mass(e, &g, &p, e.killing()[z]);
                    killed_paths.push((p, m));
                }
            }
        }
        let s: f64 = killed_paths.iter().map(|p| p.1).sum();
        r.push(Check::relative("lerw_to_cemetery_law_total", 1.0, s, TOL_LINALG));
        let direct = killed_paths.iter().find(|p| p.0.len() == 1).map(|p| p.1).unwrap_or(0.0);
        r.push(Check::residual("lerw_direct_kill_formula", killed_exact, direct, TOL_LINALG));
    }

    if n > 0 {
        let bs = BridgeSampler::new(e)?;
        let erased = draw_many(seed, purpose::BRIDGE, n, |rng| Ok(loop_erase(&bs.sample(x, y, rng)?.verts)))?;
        let pos: HashMap<&Vec<usize>, usize> = paths.iter().enumerate().map(|(i, p)| (p, i)).collect();
        let mut counts = vec![0usize; paths.len()];
        let mut other = 0usize;
        for p in &erased {
            match pos.get(p) {
                Some(&i) => counts[i] += 1,
                None => other += 1,
            }
        }
        let mut emp: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
        let mut ex = law.clone();
        emp.push(other as f64 / n as f64);
        ex.push(0.0);
        r.push(Check::upper(format!("bridge_erasure_tv[{} paths]", paths.len()), 0.0, total_variation(&emp, &ex), TV_GATE));
        for (i, p) in paths.iter().enumerate() {
            let (f, se) = proportion(counts[i], n);
            r.push(Check::z(format!("bridge_erasure[{}]", label(e, p)), law[i], f, se));
        }
        if kx > 0.0 {
            let walks = draw_many(seed, purpose::LERW, n, |rng| lerw(e, x, Root::Cemetery, rng))?;
            let direct = walks.iter().filter(|w| w.as_slice() == [Node::V(x), Node::Delta]).count();
            let (f, se) = proportion(direct, n);
            r.push(Check::z(format!("lerw_direct_kill[{}]", e.name(x)), killed_exact, f, se));
        }
    }
    Ok(timed(r.finalize(), start))
}
