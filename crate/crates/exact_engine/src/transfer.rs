use graph_model::EnergyForm;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::green::{green, rooted_green};
use crate::linalg::lu_det;
use crate::EngineError;

/// A vertex of the graph or the cemetery of its recurrent extension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Node {
    V(usize),
    Delta,
}

impl Node {
    pub fn label(&self, e: &EnergyForm) -> String {
        match self {
            Node::V(i) => e.name(*i).to_string(),
            Node::Delta => graph_model::CEMETERY.to_string(),
        }
    }
}

/// Unoriented edge key with the smaller endpoint first (`Δ` sorts last).
pub fn edge_key(a: Node, b: Node) -> (Node, Node) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

pub type Edge = (Node, Node);

/// Conductance of an edge of the (possibly extended) graph.
pub fn edge_conductance(e: &EnergyForm, (a, b): Edge) -> f64 {
    match (a, b) {
        (Node::V(x), Node::V(y)) => e.c(x, y),
        (Node::V(x), Node::Delta) | (Node::Delta, Node::V(x)) => e.killing()[x],
        (Node::Delta, Node::Delta) => 0.0,
    }
}

/// Spanning-tree root: the cemetery for transient chains, a vertex otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Root {
    Cemetery,
    Vertex(usize),
}

impl Root {
    /// `Δ` when transient, `fallback` when recurrent.
    pub fn natural(e: &EnergyForm, fallback: usize) -> Root {
        if e.is_transient() {
            Root::Cemetery
        } else {
            Root::Vertex(fallback)
        }
    }

    pub fn node(&self) -> Node {
        match self {
            Root::Cemetery => Node::Delta,
            Root::Vertex(v) => Node::V(*v),
        }
    }
}

/// All edges of the graph spanned by trees for the given root, in a fixed
/// order: vertex pairs `i < j`, then `(x, Δ)` edges for killed vertices.
pub fn tree_edges(e: &EnergyForm, root: Root) -> Vec<Edge> {
    let mut out: Vec<Edge> = e.edges().into_iter().map(|(i, j, _)| (Node::V(i), Node::V(j))).collect();
    if root == Root::Cemetery {
        for x in 0..e.len() {
            if e.killing()[x] > 0.0 {
                out.push((Node::V(x), Node::Delta));
            }
        }
    }
    out
}

/// Green function used by the transfer matrix: `G` with `G^{·Δ} = 0`
/// (transient), or the Green function killed at the root vertex.
#[derive(Clone, Debug)]
pub struct TreeGreen {
    g: DMatrix<f64>,
    pub root: Root,
    /// `log Z` of the spanning-tree measure (`log det G` or `log det G^{root^c}`).
    pub log_z: f64,
}

impl TreeGreen {
    pub fn new(e: &EnergyForm, root: Root) -> Result<Self, EngineError> {
        match root {
            Root::Cemetery => {
                let b = green(e)?;
                Ok(Self { g: b.g, root, log_z: b.log_det_g })
            }
            Root::Vertex(r) => {
                if e.is_transient() {
                    return Err(EngineError::Transient);
                }
                Ok(Self { g: rooted_green(e, r)?, root, log_z: crate::green::rooted_log_partition(e, r)? })
            }
        }
    }

    pub fn at(&self, a: Node, b: Node) -> f64 {
        match (a, b) {
            (Node::V(x), Node::V(y)) => self.g[(x, y)],
            _ => 0.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TransferMatrix {
    pub edges: Vec<Edge>,
    pub conductances: Vec<f64>,
    /// `K^{(x,y),(u,v)} = G^{xu} + G^{yv} - G^{xv} - G^{yu}`.
    pub k: DMatrix<f64>,
}

impl TransferMatrix {
    /// `P(ξ_i ∈ Υ for all i in idx) = ∏C · det K|_idx`.
    pub fn inclusion_probability(&self, idx: &[usize]) -> f64 {
        let sub = DMatrix::from_fn(idx.len(), idx.len(), |a, b| self.k[(idx[a], idx[b])]);
        idx.iter().map(|&i| self.conductances[i]).product::<f64>() * lu_det(&sub)
    }

    /// `M_{√C} K M_{√C}`.
    pub fn scaled(&self) -> DMatrix<f64> {
        let s: Vec<f64> = self.conductances.iter().map(|c| c.sqrt()).collect();
        DMatrix::from_fn(self.edges.len(), self.edges.len(), |i, j| s[i] * self.k[(i, j)] * s[j])
    }

    /// `E[exp(-Σ_{ξ∈Υ} g(ξ))] = det(I - M_{√(C(1-e^{-g}))} K M_{√(C(1-e^{-g}))})`;
    /// `g` is indexed like `edges`, which must list every tree edge once.
    pub fn edge_laplace(&self, g: &[f64]) -> f64 {
        let m = self.edges.len();
        let s: Vec<f64> = (0..m).map(|i| (self.conductances[i] * (1.0 - (-g[i]).exp())).sqrt()).collect();
        let a = DMatrix::from_fn(m, m, |i, j| (i == j) as u8 as f64 - s[i] * self.k[(i, j)] * s[j]);
        lu_det(&a)
    }
}

/// Transfer matrix of a list of oriented edges. Each edge needs positive
/// conductance; `Δ` endpoints need a transient chain and root `Δ`.
pub fn transfer_matrix(e: &EnergyForm, edges: &[Edge], root: Root) -> Result<TransferMatrix, EngineError> {
    let tg = TreeGreen::new(e, root)?;
    transfer_matrix_with(e, &tg, edges)
}

pub fn transfer_matrix_with(e: &EnergyForm, tg: &TreeGreen, edges: &[Edge]) -> Result<TransferMatrix, EngineError> {
    let mut conductances = Vec::with_capacity(edges.len());
    for &(a, b) in edges {
        if a == b {
            return Err(EngineError::DegenerateEdge(a.label(e)));
        }
        if (a == Node::Delta || b == Node::Delta) && tg.root != Root::Cemetery {
            return Err(EngineError::Mismatch("cemetery edge on a chain rooted at a vertex".into()));
        }
        let c = edge_conductance(e, (a, b));
        if c <= 0.0 {
            return Err(EngineError::ZeroConductance(a.label(e), b.label(e)));
        }
        conductances.push(c);
    }
    let m = edges.len();
    let k = DMatrix::from_fn(m, m, |i, j| {
        let (x, y) = edges[i];
        let (u, v) = edges[j];
        tg.at(x, u) + tg.at(y, v) - tg.at(x, v) - tg.at(y, u)
    });
    Ok(TransferMatrix { edges: edges.to_vec(), conductances, k })
}
