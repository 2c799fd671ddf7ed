use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::GraphError;

/// Relative tolerance used when checking that a user-supplied conductance
/// matrix is symmetric.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Finite weighted graph with killing: conductances `C` (symmetric, zero
/// diagonal) and killing measure `κ`. `λ = κ + C·1` and `P = C/λ` are derived.
#[derive(Clone, Debug)]
pub struct EnergyForm {
    names: Vec<String>,
    index: HashMap<String, usize>,
    c: DMatrix<f64>,
    kappa: DVector<f64>,
    lambda: DVector<f64>,
    connected: bool,
}

impl EnergyForm {
    /// Validated energy form; rejects disconnected graphs.
    pub fn new(names: Vec<String>, c: DMatrix<f64>, kappa: DVector<f64>) -> Result<Self, GraphError> {
        Self::build(names, c, kappa, true)
    }

    /// Same validation except connectivity. Restrictions of a connected graph
    /// can split into several components; each one is then killed somewhere,
    /// so every Green function stays well defined.
    pub fn new_allow_disconnected(
        names: Vec<String>,
        c: DMatrix<f64>,
        kappa: DVector<f64>,
    ) -> Result<Self, GraphError> {
        Self::build(names, c, kappa, false)
    }

    /// Build from an undirected edge list over `names` (indices into it).
    pub fn from_edges(
        names: &[&str],
        edges: &[(usize, usize, f64)],
        kappa: &[f64],
    ) -> Result<Self, GraphError> {
        let n = names.len();
        if kappa.len() != n {
            return Err(GraphError::Malformed(format!(
                "{} killing values for {} vertices",
                kappa.len(),
                n
            )));
        }
        let mut c = DMatrix::zeros(n, n);
        for &(a, b, w) in edges {
            if a >= n || b >= n {
                return Err(GraphError::Malformed(format!("edge ({a},{b}) out of range")));
            }
            if a == b {
                return Err(GraphError::SelfLoop(names[a].to_string()));
            }
            if c[(a, b)] != 0.0 {
                return Err(GraphError::DuplicateEdge(names[a].into(), names[b].into()));
            }
            c[(a, b)] = w;
            c[(b, a)] = w;
        }
        Self::new(
            names.iter().map(|s| s.to_string()).collect(),
            c,
            DVector::from_column_slice(kappa),
        )
    }

    fn build(
        names: Vec<String>,
        c: DMatrix<f64>,
        kappa: DVector<f64>,
        require_connected: bool,
    ) -> Result<Self, GraphError> {
        let n = names.len();
        if n == 0 {
            return Err(GraphError::EmptySet);
        }
        if c.nrows() != n || c.ncols() != n || kappa.len() != n {
            return Err(GraphError::Malformed("dimension mismatch".into()));
        }
        let mut index = HashMap::with_capacity(n);
        for (i, s) in names.iter().enumerate() {
            if index.insert(s.clone(), i).is_some() {
                return Err(GraphError::DuplicateVertex(s.clone()));
            }
        }
        for i in 0..n {
            if !kappa[i].is_finite() {
                return Err(GraphError::Malformed(format!("non-finite killing at {}", names[i])));
            }
            if kappa[i] < 0.0 {
                return Err(GraphError::NegativeKilling(names[i].clone()));
            }
            if c[(i, i)] != 0.0 {
                return Err(GraphError::SelfLoop(names[i].clone()));
            }
            for j in 0..n {
                let w = c[(i, j)];
                if !w.is_finite() {
                    return Err(GraphError::Malformed(format!(
                        "non-finite conductance {}-{}",
                        names[i], names[j]
                    )));
                }
                if w < 0.0 {
                    return Err(GraphError::NegativeConductance(names[i].clone(), names[j].clone()));
                }
                let scale = w.abs().max(c[(j, i)].abs());
                if (w - c[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return Err(GraphError::Asymmetric(names[i].clone(), names[j].clone()));
                }
            }
        }
        let mut lambda = kappa.clone();
        for i in 0..n {
            lambda[i] += c.row(i).sum();
            if lambda[i] <= 0.0 {
                return Err(GraphError::ZeroLambda(names[i].clone()));
            }
        }
        let unreached = first_unreached(&c);
        if require_connected {
            if let Some(v) = unreached {
                return Err(GraphError::Disconnected(names[v].clone(), names[0].clone()));
            }
        } else if unreached.is_some() {
            // every component must carry killing, otherwise M_λ - C is singular
            for comp in components(&c) {
                if comp.iter().all(|&i| kappa[i] == 0.0) {
                    return Err(GraphError::Invalid(format!(
                        "component containing {} has no killing",
                        names[comp[0]]
                    )));
                }
            }
        }
        Ok(Self { names, index, c, kappa, lambda, connected: unreached.is_none() })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn vertex(&self, name: &str) -> Result<usize, GraphError> {
        self.index_of(name).ok_or_else(|| GraphError::UnknownVertex(name.to_string()))
    }

    pub fn subset<S: AsRef<str>>(&self, names: &[S]) -> Result<VertexSubset, GraphError> {
        let idx = names.iter().map(|s| self.vertex(s.as_ref())).collect::<Result<Vec<_>, _>>()?;
        VertexSubset::new(self.len(), idx)
    }

    pub fn conductance(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn c(&self, i: usize, j: usize) -> f64 {
        self.c[(i, j)]
    }

    pub fn killing(&self) -> &DVector<f64> {
        &self.kappa
    }

    pub fn lambda(&self) -> &DVector<f64> {
        &self.lambda
    }

    /// `P^x_y = C_{x,y} / λ_x`.
    pub fn transition(&self) -> DMatrix<f64> {
        let n = self.len();
        DMatrix::from_fn(n, n, |i, j| self.c[(i, j)] / self.lambda[i])
    }

    /// `M_λ - C`.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let mut m = -self.c.clone();
        for i in 0..self.len() {
            m[(i, i)] = self.lambda[i];
        }
        m
    }

    pub fn is_transient(&self) -> bool {
        self.kappa.iter().any(|&k| k > 0.0)
    }

    pub fn is_connected(&self) -> bool {
        self.connected
    }

    /// Undirected edges `(i, j, C_ij)` with `i < j` and positive conductance.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let n = self.len();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if self.c[(i, j)] > 0.0 {
                    out.push((i, j, self.c[(i, j)]));
                }
            }
        }
        out
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..self.len()).filter_map(move |j| {
            let w = self.c[(i, j)];
            (w > 0.0).then_some((j, w))
        })
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors(i).count()
    }
}

fn first_unreached(c: &DMatrix<f64>) -> Option<usize> {
    let comps = components(c);
    if comps.len() <= 1 {
        None
    } else {
        comps[1].first().copied()
    }
}

/// Connected components of the positive-conductance graph, each sorted, in
/// order of their smallest vertex.
pub fn components(c: &DMatrix<f64>) -> Vec<Vec<usize>> {
    let n = c.nrows();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        let mut comp = vec![s];
        seen[s] = true;
        let mut k = 0;
        while k < comp.len() {
            let u = comp[k];
            k += 1;
            for v in 0..n {
                if !seen[v] && c[(u, v)] > 0.0 {
                    seen[v] = true;
                    comp.push(v);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Sorted set of vertex indices of a graph with `n` vertices.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VertexSubset {
    n: usize,
    members: Vec<usize>,
}

impl VertexSubset {
    pub fn new(n: usize, members: impl IntoIterator<Item = usize>) -> Result<Self, GraphError> {
        let mut m: Vec<usize> = members.into_iter().collect();
        if let Some(&bad) = m.iter().find(|&&i| i >= n) {
            return Err(GraphError::Malformed(format!("vertex index {bad} out of range")));
        }
        m.sort_unstable();
        m.dedup();
        Ok(Self { n, members: m })
    }

    pub fn full(n: usize) -> Self {
        Self { n, members: (0..n).collect() }
    }

    pub fn empty(n: usize) -> Self {
        Self { n, members: Vec::new() }
    }

    pub fn singleton(n: usize, i: usize) -> Self {
        assert!(i < n);
        Self { n, members: vec![i] }
    }

    pub fn universe(&self) -> usize {
        self.n
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.members.binary_search(&i).is_ok()
    }

    pub fn complement(&self) -> Self {
        Self { n: self.n, members: (0..self.n).filter(|i| !self.contains(*i)).collect() }
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut m = self.members.clone();
        m.extend_from_slice(&other.members);
        m.sort_unstable();
        m.dedup();
        Self { n: self.n, members: m }
    }

    pub fn difference(&self, other: &Self) -> Self {
        Self { n: self.n, members: self.members.iter().copied().filter(|i| !other.contains(*i)).collect() }
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.members.iter().all(|i| !other.contains(*i))
    }

    /// Membership mask of length `n`.
    pub fn mask(&self) -> Vec<bool> {
        let mut m = vec![false; self.n];
        for &i in &self.members {
            m[i] = true;
        }
        m
    }
}
