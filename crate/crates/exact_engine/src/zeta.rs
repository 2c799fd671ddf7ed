use graph_model::EnergyForm;
use nalgebra::DMatrix;
use serde::Serialize;

use crate::linalg::lu_det;
use crate::EngineError;

/// Default (and maximal) `m_max` for the exhaustive walk enumeration.
pub const NB_M_MAX: usize = 10;
const NB_FRONTIER_LIMIT: f64 = 5e8;

#[derive(Clone, Debug, Serialize)]
pub struct ZetaPoint {
    pub u: f64,
    /// Vertex formula `(1-u²)^{-χ} det(I - uA + u²(D-I))^{-1}`.
    #[serde(rename = "IZ")]
    pub iz: f64,
    /// Line-graph formula `det(I - uQ)^{-1}`.
    #[serde(rename = "IZ_line")]
    pub iz_line: f64,
    /// `exp(Σ_{m ≤ m_max} N_m u^m / m)`.
    #[serde(rename = "IZ_series")]
    pub iz_series: f64,
    /// Bound on `|log IZ - log IZ_series|` from the omitted terms.
    pub series_tail: f64,
}

/// Counts and zeta values; `N[m-1]`, `L[m-1]` refer to length `m`.
#[derive(Clone, Debug, Serialize)]
pub struct ZetaReport {
    pub chi: i64,
    #[serde(rename = "N")]
    pub n: Vec<i64>,
    #[serde(rename = "L")]
    pub l: Vec<i64>,
    pub grid: Vec<ZetaPoint>,
}

struct Adjacency {
    a: DMatrix<f64>,
    deg: Vec<usize>,
    /// oriented edges `(x, y)`
    darts: Vec<(usize, usize)>,
}

fn adjacency(e: &EnergyForm) -> Result<Adjacency, EngineError> {
    let n = e.len();
    let mut a = DMatrix::zeros(n, n);
    let mut darts = Vec::new();
    for (i, j, w) in e.edges() {
        if w != 1.0 {
            return Err(EngineError::NotUnit(e.name(i).to_string(), e.name(j).to_string()));
        }
        a[(i, j)] = 1.0;
        a[(j, i)] = 1.0;
        darts.push((i, j));
        darts.push((j, i));
    }
    let deg = (0..n).map(|i| e.degree(i)).collect();
    Ok(Adjacency { a, deg, darts })
}

pub fn euler_characteristic(e: &EnergyForm) -> i64 {
    e.edges().len() as i64 - e.len() as i64
}

/// Non-backtracking edge operator `Q_{(x,y),(y,z)} = 1` for `z ≠ x`.
pub fn edge_operator(e: &EnergyForm) -> Result<(Vec<(usize, usize)>, DMatrix<f64>), EngineError> {
    let adj = adjacency(e)?;
    let m = adj.darts.len();
    let q = DMatrix::from_fn(m, m, |s, t| {
        let (x, y) = adj.darts[s];
        let (y2, z) = adj.darts[t];
        (y == y2 && z != x) as u8 as f64
    });
    Ok((adj.darts, q))
}

/// `Tr(Q^m)` for `m = 1..=m_max`, in exact integer arithmetic.
pub fn line_graph_traces(e: &EnergyForm, m_max: usize) -> Result<Vec<i64>, EngineError> {
    let (_, q) = edge_operator(e)?;
    let d = q.nrows();
    let qi: Vec<Vec<i128>> = (0..d).map(|i| (0..d).map(|j| q[(i, j)] as i128).collect()).collect();
    let mut pow = qi.clone();
    let mut out = Vec::with_capacity(m_max);
    for m in 1..=m_max {
        if m > 1 {
            let mut next = vec![vec![0i128; d]; d];
            for i in 0..d {
                for k in 0..d {
                    if pow[i][k] == 0 {
                        continue;
                    }
                    for j in 0..d {
                        next[i][j] += pow[i][k] * qi[k][j];
                    }
                }
            }
            pow = next;
        }
        let tr: i128 = (0..d).map(|i| pow[i][i]).sum();
        out.push(i64::try_from(tr).map_err(|_| EngineError::GuardExceeded("trace overflow".into()))?);
    }
    Ok(out)
}

/// `N_m` and `L_m` from the vertex-determinant formulas, rounded with a 1e-6
/// integrality gate.
///
/// With `M(u) = I - uA + u²(D-I)` and `M(u)^{-1} = Σ B_k u^k`
/// (`B_0 = I`, `B_1 = A`, `B_k = A B_{k-1} - (D-I) B_{k-2}`):
/// `log IZ = -χ log(1-u²) - log det M(u)` gives `N_m = -c_{m-1} + 2χ[m even]`
/// where `c_k` is the `u^k` coefficient of `Tr(M^{-1} M')`, and
/// `Σ L_m u^m = (1-u²) Tr M^{-1} - |X|` gives `L_m = Tr B_m - Tr B_{m-2}`.
pub fn series_counts(e: &EnergyForm, m_max: usize) -> Result<(Vec<i64>, Vec<i64>), EngineError> {
    let adj = adjacency(e)?;
    let n = e.len();
    let dm1 = DMatrix::from_fn(n, n, |i, j| if i == j { adj.deg[i] as f64 - 1.0 } else { 0.0 });
    let mut b: Vec<DMatrix<f64>> = vec![DMatrix::identity(n, n), adj.a.clone()];
    for k in 2..=m_max {
        let next = &adj.a * &b[k - 1] - &dm1 * &b[k - 2];
        b.push(next);
    }
    let chi = euler_characteristic(e);
    let round = |v: f64, what: &str| -> Result<i64, EngineError> {
        let r = v.round();
        if (v - r).abs() > 1e-6 * (1.0 + v.abs()) {
            return Err(EngineError::Inconsistent(format!("{what} coefficient {v} is not an integer")));
        }
        Ok(r as i64)
    };
    let mut nn = Vec::with_capacity(m_max);
    let mut ll = Vec::with_capacity(m_max);
    for m in 1..=m_max {
        // Tr(M^{-1} M') with M' = -A + 2u(D-I): c_k = -Tr(B_k A) + 2 Tr(B_{k-1}(D-I))
        let k = m - 1;
        let mut ck = -(&b[k] * &adj.a).trace();
        if k >= 1 {
            ck += 2.0 * (&b[k - 1] * &dm1).trace();
        }
        let mut nm = -ck;
        if m % 2 == 0 {
            nm += 2.0 * chi as f64;
        }
        nn.push(round(nm, "N")?);
        let lm = b[m].trace() - if m >= 2 { b[m - 2].trace() } else { 0.0 };
        ll.push(round(lm, "L")?);
    }
    Ok((nn, ll))
}

/// Exhaustive depth-first count of closed non-backtracking walks of each
/// length `m ≤ m_max`: `L_m` counts all of them, `N_m` those whose last step
/// is not reversed by the first (no tail).
pub fn non_backtracking_counts(e: &EnergyForm, m_max: usize) -> Result<(Vec<i64>, Vec<i64>), EngineError> {
    let adj = adjacency(e)?;
    if m_max > NB_M_MAX {
        return Err(EngineError::GuardExceeded(format!("m_max {m_max} > {NB_M_MAX}")));
    }
    let q = adj.deg.iter().copied().max().unwrap_or(0).saturating_sub(1).max(1) as f64;
    let frontier = adj.darts.len() as f64 * q.powi(m_max.saturating_sub(1) as i32);
    if frontier > NB_FRONTIER_LIMIT {
        return Err(EngineError::GuardExceeded(format!("enumeration frontier {frontier:.3e} too large")));
    }
    let n = e.len();
    let nbrs: Vec<Vec<usize>> = (0..n).map(|x| e.neighbors(x).map(|(y, _)| y).collect()).collect();
    let mut nn = vec![0i64; m_max];
    let mut ll = vec![0i64; m_max];
    let mut path = Vec::with_capacity(m_max + 1);
    for s in 0..n {
        path.clear();
        path.push(s);
        walk(&nbrs, &mut path, m_max, &mut nn, &mut ll);
    }
    Ok((nn, ll))
}

fn walk(nbrs: &[Vec<usize>], path: &mut Vec<usize>, m_max: usize, nn: &mut [i64], ll: &mut [i64]) {
    let len = path.len() - 1;
    let cur = *path.last().unwrap();
    if len > 0 && cur == path[0] {
        ll[len - 1] += 1;
        if path[1] != path[len - 1] {
            nn[len - 1] += 1;
        }
    }
    if len == m_max {
        return;
    }
    let prev = if len > 0 { Some(path[len - 1]) } else { None };
    for &y in &nbrs[cur] {
        if Some(y) == prev {
            continue;
        }
        path.push(y);
        walk(nbrs, path, m_max, nn, ll);
        path.pop();
    }
}

/// Largest `u` for which the Euler product converges: `1/max(d_x - 1)`.
pub fn zeta_radius(e: &EnergyForm) -> f64 {
    let q = (0..e.len()).map(|i| e.degree(i)).max().unwrap_or(0).saturating_sub(1);
    if q == 0 {
        1.0
    } else {
        1.0 / q as f64
    }
}

pub fn zeta_ihara(e: &EnergyForm, u_grid: &[f64], m_max: usize) -> Result<ZetaReport, EngineError> {
    let adj = adjacency(e)?;
    let radius = zeta_radius(e);
    for &u in u_grid {
        if !(u > 0.0 && u < radius) {
            return Err(EngineError::OutOfRange(format!("u = {u} outside (0, {radius})")));
        }
    }
    let chi = euler_characteristic(e);
    let (nn, ll) = series_counts(e, m_max)?;
    let (_, q) = edge_operator(e)?;
    let n = e.len();
    let qmax = 1.0 / radius;
    let mut grid = Vec::with_capacity(u_grid.len());
    for &u in u_grid {
        let m = DMatrix::from_fn(n, n, |i, j| {
            let mut v = -u * adj.a[(i, j)];
            if i == j {
                v += 1.0 + u * u * (adj.deg[i] as f64 - 1.0);
            }
            v
        });
        let iz = (1.0 - u * u).powf(-(chi as f64)) / lu_det(&m);
        let d = q.nrows();
        let iz_line = 1.0 / lu_det(&(DMatrix::identity(d, d) - q.scale(u)));
        let log_series: f64 = nn.iter().enumerate().map(|(k, &c)| c as f64 * u.powi(k as i32 + 1) / (k + 1) as f64).sum();
        // N_m ≤ Tr(Q^m) ≤ 2|E| q^m
        let r = u * qmax;
        let mm = (m_max + 1) as f64;
        let series_tail = adj.darts.len() as f64 * r.powi(m_max as i32 + 1) / (mm * (1.0 - r));
        grid.push(ZetaPoint { u, iz, iz_line, iz_series: log_series.exp(), series_tail });
    }
    Ok(ZetaReport { chi, n: nn, l: ll, grid })
}
