use std::time::Instant;

use exact_engine::{green, green_chi};
use graph_model::EnergyForm;
use loop_measure::{occupation_laplace, occupation_moment};
use nalgebra::{DMatrix, DVector};
use samplers::{BridgeSampler, GffSampler};

use super::{label, require_transient, soups};
use crate::stats::{difference, mean_se};
use crate::{draw_many, purpose, timed, Check, VerificationReport, VerifyError, TOL_LINALG};

/// Joint moments compared by the suite: every multiset of size ≤ 3 on one
/// or two vertices, otherwise a representative pattern on the first three.
pub fn moment_points(n: usize) -> Vec<Vec<usize>> {
    if n <= 2 {
        let mut out = Vec::new();
        for size in 1..=3 {
            // nondecreasing sequences over 0..n
            let mut cur = vec![0; size];
            loop {
                out.push(cur.clone());
                let mut i = size;
                while i > 0 && cur[i - 1] == n - 1 {
                    i -= 1;
                }
                if i == 0 {
                    break;
                }
                cur[i - 1] += 1;
                let v = cur[i - 1];
                for c in cur.iter_mut().skip(i) {
                    *c = v;
                }
            }
        }
        return out;
    }
    vec![vec![0], vec![0, 0], vec![0, 1], vec![0, 0, 0], vec![0, 0, 1], vec![0, 1, 2]]
}

fn hafnian(g: &DMatrix<f64>, idx: &[usize]) -> f64 {
    if idx.is_empty() {
        return 1.0;
    }
    let (a, rest) = (idx[0], &idx[1..]);
    let mut s = 0.0;
    for j in 0..rest.len() {
        let others: Vec<usize> = rest.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, &v)| v).collect();
        s += g[(a, rest[j])] * hafnian(g, &others);
    }
    s
}

/// `E[∏_i ½ Σ_{j<k} φ_j(x_i)²]` for `k` independent fields with covariance
/// `G`, by Wick's rule on each copy.
pub fn isserlis_moment(g: &DMatrix<f64>, points: &[usize], copies: usize) -> f64 {
    let m = points.len();
    let mut total = 0.0;
    let mut assign = vec![0usize; m];
    loop {
        let mut term = 1.0;
        for c in 0..copies {
            let doubled: Vec<usize> =
                points.iter().zip(&assign).filter(|(_, &a)| a == c).flat_map(|(&p, _)| [p, p]).collect();
            term *= hafnian(g, &doubled);
        }
        total += term;
        let mut i = 0;
        while i < m && assign[i] + 1 == copies {
            assign[i] = 0;
            i += 1;
        }
        if i == m {
            break;
        }
        assign[i] += 1;
    }
    total / 2f64.powi(m as i32)
}

fn test_chi(n: usize) -> DVector<f64> {
    DVector::from_fn(n, |i, _| 0.5 + 0.25 * (i % 3) as f64)
}

/// Dynkin isomorphism at `α = k/2`.
pub fn verify_dynkin(e: &EnergyForm, fixture: &str, k: usize, n: usize, seed: u64) -> Result<VerificationReport, VerifyError> {
    let start = Instant::now();
    require_transient(e)?;
    if k == 0 {
        return Err(VerifyError::Precondition("k must be a positive integer".into()));
    }
    let alpha = k as f64 / 2.0;
    let g = green(e)?.g;
    let nv = e.len();
    let pts = moment_points(nv);
    let mut r = VerificationReport::new("dynkin", fixture, n, seed);

    let exact: Vec<f64> = pts.iter().map(|p| occupation_moment(e, alpha, p)).collect::<Result<_, _>>()?;
    for (p, &want) in pts.iter().zip(&exact) {
        let wick = isserlis_moment(&g, p, k);
        r.push(Check::relative(format!("isserlis_vs_permanent[{}]", label(e, p)), want, wick, TOL_LINALG));
    }

    let (x, y) = (0, nv - 1);
    let chi = test_chi(nv);
    let gchi = green_chi(e, &chi)?;
    let laplace = occupation_laplace(e, 0.5, &chi)?;
    let b_exact = laplace * gchi[(x, y)];
    // same quantity through both sides of identity b)
    let b_det = ((exact_engine::log_det_green_chi(e, &chi)? - green(e)?.log_det_g) / 2.0).exp() * gchi[(x, y)];
    r.push(Check::relative("identity_b_exact", b_det, b_exact, TOL_LINALG));

    if n > 0 {
        let soup = soups(e, alpha, n, seed, purpose::SOUP)?;
        let occ: Vec<DVector<f64>> = soup.iter().map(|s| s.occupation()).collect();
        let gff = GffSampler::new(e)?;
        let fields: Vec<Vec<DVector<f64>>> =
            draw_many(seed, purpose::GFF, n, |rng| Ok((0..k).map(|_| gff.sample_vec(rng)).collect()))?;
        let half_sq: Vec<DVector<f64>> = fields
            .iter()
            .map(|fs| DVector::from_fn(nv, |i, _| 0.5 * fs.iter().map(|f| f[i] * f[i]).sum::<f64>()))
            .collect();
        for (p, &want) in pts.iter().zip(&exact) {
            let prod = |v: &DVector<f64>| p.iter().map(|&i| v[i]).product::<f64>();
            let a: Vec<f64> = occ.iter().map(prod).collect();
            let b: Vec<f64> = half_sq.iter().map(prod).collect();
            let (ma, sa) = mean_se(&a);
            let (mb, sb) = mean_se(&b);
            r.push(Check::z(format!("soup_vs_permanent[{}]", label(e, p)), want, ma, sa));
            let (d, sd) = difference((ma, sa), (mb, sb));
            r.push(Check::z(format!("soup_vs_field[{}]", label(e, p)), 0.0, d, sd));
        }

        // identity b) at α = 1/2 with F(l) = exp(-<χ, l>)
        let lhs: Vec<f64> = fields
            .iter()
            .map(|fs| {
                let f = &fs[0];
                let q: f64 = (0..nv).map(|i| chi[i] * f[i] * f[i]).sum::<f64>() / 2.0;
                f[x] * f[y] * (-q).exp()
            })
            .collect();
        let (ml, sl) = mean_se(&lhs);
        r.push(Check::z("identity_b_field_side", b_exact, ml, sl));
        let half = if k == 1 { soup } else { soups(e, 0.5, n, seed, purpose::with(purpose::SOUP, 1))? };
        let bs = BridgeSampler::new(e)?;
        let bridges = draw_many(seed, purpose::BRIDGE, n, |rng| bs.sample(x, y, rng))?;
        let rhs: Vec<f64> = half
            .iter()
            .zip(&bridges)
            .map(|(s, b)| {
                let l = s.occupation() + b.occupation(nv);
                g[(x, y)] * (-chi.dot(&l)).exp()
            })
            .collect();
        let (mr, sr) = mean_se(&rhs);
        r.push(Check::z("identity_b_loop_side", b_exact, mr, sr));
    }
    Ok(timed(r.finalize(), start))
}
