use std::time::Instant;

use exact_engine::{
    green, linalg::spd_logdet, partition_ratio, transfer_matrix, Edge, Node, OneForm, Root,
};
use graph_model::{fixtures, EnergyForm, GraphDocument, VertexSubset};
use loop_measure::mu_meet_all;
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::{timed, Check, VerificationReport, VerifyError, TOL_LINALG};

const FAMILY: usize = 5;
const SYM_TOL: f64 = 1e-12;

/// An involution of the vertex set and the half `X+` it exchanges with
/// `X- = ρ(X+)`; the remaining vertices are fixed.
#[derive(Clone, Debug, PartialEq)]
pub struct Reflection {
    pub rho: Vec<usize>,
    pub plus: Vec<usize>,
    pub minus: Vec<usize>,
    pub zero: Vec<usize>,
}

impl Reflection {
    pub fn new(e: &EnergyForm, rho: Vec<usize>, plus: Vec<usize>) -> Result<Self, VerifyError> {
        let n = e.len();
        let bad = |m: String| Err(VerifyError::Precondition(m));
        if rho.len() != n || rho.iter().any(|&v| v >= n) {
            return bad("ρ is not a map of the vertex set".into());
        }
        for x in 0..n {
            if rho[rho[x]] != x {
                return bad(format!("ρ is not an involution at {}", e.name(x)));
            }
        }
        let mut side = vec![0i8; n];
        for &x in &plus {
            if x >= n {
                return bad("X+ vertex out of range".into());
            }
            if rho[x] == x {
                return bad(format!("X+ contains the fixed point {}", e.name(x)));
            }
            if side[x] != 0 {
                return bad(format!("{} listed twice in X+ or in both halves", e.name(x)));
            }
            side[x] = 1;
            if side[rho[x]] == 1 {
                return bad(format!("ρ does not exchange X+ and X- at {}", e.name(x)));
            }
            side[rho[x]] = -1;
        }
        if plus.is_empty() {
            return bad("X+ is empty".into());
        }
        let minus: Vec<usize> = plus.iter().map(|&x| rho[x]).collect();
        let zero: Vec<usize> = (0..n).filter(|&x| side[x] == 0).collect();
        if let Some(&x) = zero.iter().find(|&&x| rho[x] != x) {
            return bad(format!("{} is neither in X+, X- nor fixed by ρ", e.name(x)));
        }
        for x in 0..n {
            if (e.killing()[x] - e.killing()[rho[x]]).abs() > SYM_TOL {
                return bad(format!("κ is not ρ-invariant at {}", e.name(x)));
            }
            for y in 0..n {
                if (e.c(x, y) - e.c(rho[x], rho[y])).abs() > SYM_TOL {
                    return bad(format!("C is not ρ-invariant on {}-{}", e.name(x), e.name(y)));
                }
            }
        }
        let r = Self { rho, plus, minus, zero };
        let cross = r.cross_matrix(e);
        let min = cross.symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -1e-12 {
            return bad(format!("cross matrix C_(x,ρ(y)) on X+ is not nonnegative definite (min eigenvalue {min})"));
        }
        Ok(r)
    }

    pub fn from_document(doc: &GraphDocument, e: &EnergyForm) -> Result<Self, VerifyError> {
        let rho = doc.involution_indices(e)?.ok_or_else(|| VerifyError::Precondition("graph has no involution".into()))?;
        let plus = doc
            .positive_half
            .as_ref()
            .ok_or_else(|| VerifyError::Precondition("graph has no positive half".into()))?
            .iter()
            .map(|v| e.vertex(v))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(e, rho, plus)
    }

    /// `C^±_{x,y} = C_{x,ρ(y)}` on `X+ × X+`.
    pub fn cross_matrix(&self, e: &EnergyForm) -> DMatrix<f64> {
        let p = &self.plus;
        DMatrix::from_fn(p.len(), p.len(), |a, b| e.c(p[a], self.rho[p[b]]))
    }

    /// Edges with both ends in `X+`.
    fn plus_edges(&self, e: &EnergyForm) -> Vec<(usize, usize)> {
        let mut inside = vec![false; e.len()];
        for &x in &self.plus {
            inside[x] = true;
        }
        e.edges().into_iter().filter(|&(i, j, _)| inside[i] && inside[j]).map(|(i, j, _)| (i, j)).collect()
    }
}

fn normalized_min_eigen(m: &DMatrix<f64>) -> f64 {
    let d: Vec<f64> = (0..m.nrows()).map(|i| m[(i, i)].abs().sqrt().max(f64::MIN_POSITIVE)).collect();
    let mut s = DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] / (d[i] * d[j]));
    let t = s.transpose();
    s = (s + t) / 2.0;
    s.symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

fn max_eigen(m: &DMatrix<f64>) -> f64 {
    let t = m.transpose();
    ((m + t) / 2.0).symmetric_eigen().eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// One member of the B-functional family: reduced conductances, raised
/// `λ` and a one-form, all on `X+`.
struct Member {
    c_scale: Vec<f64>,
    lambda_add: Vec<f64>,
    omega: Vec<f64>,
}

fn family(n_plus: usize, n_edges: usize) -> Vec<Member> {
    (0..FAMILY)
        .map(|j| {
            if j == 0 {
                return Member { c_scale: vec![1.0; n_edges], lambda_add: vec![0.0; n_plus], omega: vec![0.0; n_edges] };
            }
            Member {
                c_scale: (0..n_edges).map(|t| 1.0 - 0.15 * ((j + t) % 3) as f64).collect(),
                lambda_add: (0..n_plus).map(|i| 0.25 * ((i + 2 * j) % 3) as f64).collect(),
                omega: (0..n_edges).map(|t| 0.4 * j as f64 * (1 + t % 2) as f64 * if t % 2 == 0 { 1.0 } else { -1.0 }).collect(),
            }
        })
        .collect()
}

/// `e_{j,q} = e_j + ρ(e_q) - e` and the one-form `ω_j - ρ(ω_q)`.
fn combined(e: &EnergyForm, refl: &Reflection, edges: &[(usize, usize)], a: &Member, b: &Member) -> Result<(EnergyForm, OneForm), VerifyError> {
    let n = e.len();
    let mut c = e.conductance().clone();
    let mut lambda = e.lambda().clone();
    let mut w = DMatrix::zeros(n, n);
    let rho = &refl.rho;
    for (t, &(x, y)) in edges.iter().enumerate() {
        c[(x, y)] = e.c(x, y) * a.c_scale[t];
        c[(y, x)] = c[(x, y)];
        let (rx, ry) = (rho[x], rho[y]);
        c[(rx, ry)] = e.c(x, y) * b.c_scale[t];
        c[(ry, rx)] = c[(rx, ry)];
        w[(x, y)] = a.omega[t];
        w[(y, x)] = -a.omega[t];
        // the mirror reverses orientation, so the conjugated phase lands on
        // (ρx, ρy) with its original sign
        w[(rx, ry)] = b.omega[t];
        w[(ry, rx)] = -b.omega[t];
    }
    for (i, &x) in refl.plus.iter().enumerate() {
        lambda[x] += a.lambda_add[i];
        lambda[rho[x]] += b.lambda_add[i];
    }
    let kappa = DVector::from_fn(n, |x, _| (lambda[x] - c.row(x).sum()).max(0.0));
    let e2 = EnergyForm::new(e.names().to_vec(), c, kappa)?;
    Ok((e2, OneForm::new(w)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CounterexampleTerms {
    /// `μ(A∩B'∩ρA∩ρB')`
    pub t1: f64,
    /// `μ(A∩B'∩ρA'∩ρB)`
    pub t2: f64,
    /// `μ(A'∩B∩ρA∩ρB')`
    pub t3: f64,
    /// `μ(A'∩B∩ρA'∩ρB)`
    pub t4: f64,
    /// `μ(Φ·Φ∘ρ) = T1 - T2 - T3 + T4` for `Φ = 1_{A∩B'} - 1_{A'∩B}`.
    pub value: f64,
}

/// Exact masses on the cube-with-midpoints graph, where `A` = visits both
/// `α` and `β`, `A'` = visits neither, and `B`, `B'` likewise for `γ, δ`.
pub fn counterexample_terms(e: &EnergyForm) -> Result<CounterexampleTerms, VerifyError> {
    let n = e.len();
    let v = |s: &str| e.vertex(s).map_err(VerifyError::from);
    let (al, be, ga, de) = (v("alpha")?, v("beta")?, v("gamma")?, v("delta")?);
    let (nal, nbe, nga, nde) = (v("-alpha")?, v("-beta")?, v("-gamma")?, v("-delta")?);
    let term = |hit: [usize; 4], avoid: [usize; 4]| -> Result<f64, VerifyError> {
        let fam: Vec<VertexSubset> = hit.iter().map(|&h| VertexSubset::singleton(n, h)).collect();
        Ok(mu_meet_all(e, &fam, &VertexSubset::new(n, avoid)?)?)
    };
    let t1 = term([al, be, nal, nbe], [ga, de, nga, nde])?;
    let t2 = term([al, be, nga, nde], [ga, de, nal, nbe])?;
    let t3 = term([ga, de, nal, nbe], [al, be, nga, nde])?;
    let t4 = term([ga, de, nga, nde], [al, be, nal, nbe])?;
    Ok(CounterexampleTerms { t1, t2, t3, t4, value: t1 - t2 - t3 + t4 })
}

/// Reflection positivity for the free field, the loop soup and the spanning
/// tree, plus the exact failure for the loop measure itself.
pub fn verify_reflection_positivity(e: &EnergyForm, fixture: &str, refl: &Reflection) -> Result<VerificationReport, VerifyError> {
    let start = Instant::now();
    if !e.is_transient() {
        return Err(VerifyError::Precondition("reflection suite needs a transient chain".into()));
    }
    let mut r = VerificationReport::new("reflection_positivity", fixture, 0, 0);
    let b = green(e)?;
    let g = &b.g;
    let n = e.len();
    let rho = &refl.rho;
    let np = refl.plus.len();

    let cross_min = refl.cross_matrix(e).symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    r.push(Check::lower("cross_matrix_min_eigenvalue", 0.0, cross_min, 1e-12));
    let gp = DMatrix::from_fn(np, np, |a, c| g[(refl.plus[a], rho[refl.plus[c]])]);
    r.push(Check::lower("green_reflected_min_eigenvalue", 0.0, normalized_min_eigen(&gp), TOL_LINALG));

    // (ii) Gaussian: linear and quadratic exponentials of φ on X+
    let lift = |coef: &[f64], reflect: bool| {
        let mut v = DVector::zeros(n);
        for (i, &x) in refl.plus.iter().enumerate() {
            v[if reflect { rho[x] } else { x }] = coef[i];
        }
        v
    };
    let lin: Vec<Vec<f64>> =
        (0..FAMILY).map(|j| (0..np).map(|i| 0.2 * (((i + 1) * (j + 1)) % 5) as f64 - 0.3).collect()).collect();
    let gram_lin = DMatrix::from_fn(FAMILY, FAMILY, |j, q| {
        let a = lift(&lin[j], false) + lift(&lin[q], true);
        (0.5 * (a.transpose() * g * &a)[(0, 0)]).exp()
    });
    r.push(Check::lower("field_linear_exponential_gram_min_eigenvalue", 0.0, normalized_min_eigen(&gram_lin), TOL_LINALG));
    let quad: Vec<Vec<f64>> = (0..FAMILY).map(|j| (0..np).map(|i| 0.1 + 0.2 * ((i + 2 * j) % 4) as f64).collect()).collect();
    let lap = e.laplacian();
    let mut gram_quad = DMatrix::zeros(FAMILY, FAMILY);
    for j in 0..FAMILY {
        for q in 0..FAMILY {
            let chi = lift(&quad[j], false) + lift(&quad[q], true);
            let m = &lap + DMatrix::from_diagonal(&chi);
            gram_quad[(j, q)] = (0.5 * (-spd_logdet(&m)? - b.log_det_g)).exp();
        }
    }
    r.push(Check::lower("field_quadratic_exponential_gram_min_eigenvalue", 0.0, normalized_min_eigen(&gram_quad), TOL_LINALG));

    // (i) loop soup at integer d through the B-functional Gram matrix
    let edges = refl.plus_edges(e);
    let fam = family(np, edges.len());
    let mut gram = DMatrix::zeros(FAMILY, FAMILY);
    for j in 0..FAMILY {
        for q in 0..FAMILY {
            let (e2, w) = combined(e, refl, &edges, &fam[j], &fam[q])?;
            let z = partition_ratio(e, &e2, &w, 1.0)?;
            gram[(j, q)] = z.re;
        }
    }
    let asym = (0..FAMILY).flat_map(|j| (0..FAMILY).map(move |q| (j, q))).map(|(j, q)| (gram[(j, q)] - gram[(q, j)]).abs()).fold(0.0, f64::max);
    r.push(Check::residual("b_functional_gram_symmetry", 0.0, asym, TOL_LINALG));
    for d in [1, 2, 3] {
        let gd = gram.map(|v| v.powi(d));
        r.push(Check::lower(format!("b_functional_gram_min_eigenvalue[d={d}]"), 0.0, normalized_min_eigen(&gd), TOL_LINALG));
    }

    // (iii) spanning trees
    if edges.is_empty() {
        r.note = Some("X+ carries no internal edge: tree check (iii) is vacuous".into());
    } else {
        let root = Root::natural(e, 0);
        let mut list: Vec<Edge> = edges.iter().map(|&(x, y)| (Node::V(x), Node::V(y))).collect();
        list.extend(edges.iter().map(|&(x, y)| {
            let (a, c) = (rho[x].min(rho[y]), rho[x].max(rho[y]));
            (Node::V(a), Node::V(c))
        }));
        let tm = transfer_matrix(e, &list, root)?;
        let m = edges.len();
        let k = DMatrix::from_fn(m, m, |i, j| tm.inclusion_probability(&[i, m + j]) - tm.inclusion_probability(&[i]) * tm.inclusion_probability(&[j]));
        r.push(Check::upper("tree_covariance_max_eigenvalue", 0.0, max_eigen(&k), TOL_LINALG));
    }

    // the loop measure itself is not reflection positive
    let cdoc = fixtures::counterexample();
    let ce = cdoc.to_energy_form()?;
    let hyp = Reflection::from_document(&cdoc, &ce);
    r.push(Check::residual("counterexample_satisfies_hypotheses", 1.0, hyp.is_ok() as u8 as f64, 0.0));
    let t = counterexample_terms(&ce)?;
    r.push(Check::residual("counterexample_t1_vanishes", 0.0, t.t1, 1e-12));
    r.push(Check::residual("counterexample_t4_vanishes", 0.0, t.t4, 1e-12));
    r.push(Check::relative("counterexample_t2_equals_t3", t.t2, t.t3, TOL_LINALG));
    r.push(Check::relative("counterexample_value_is_minus_2_t2", -2.0 * t.t2, t.value, TOL_LINALG));
    r.push(Check::negative("counterexample_mu_phi_phi_rho", t.value));
    Ok(timed(r.finalize(), start))
}
