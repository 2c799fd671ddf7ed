use exact_engine::{edge_key, Edge, Node, Root};
use graph_model::EnergyForm;
use loop_measure::PointedLoop;
use nalgebra::DVector;
use rand::Rng;
use serde::Serialize;

use crate::loops::{holding_time, LoopEnsemble};
use crate::SampleError;

pub const WALK_STEP_LIMIT: usize = 50_000_000;

/// `parent[x]` is the next node on the way to the root; `None` only for a
/// vertex root.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SpanningTree {
    pub root: Root,
    pub parent: Vec<Option<Node>>,
}

impl SpanningTree {
    /// Unoriented edges in canonical order.
    pub fn edges(&self) -> Vec<Edge> {
        let mut out: Vec<Edge> =
            self.parent.iter().enumerate().filter_map(|(x, p)| p.map(|p| edge_key(Node::V(x), p))).collect();
        out.sort();
        out
    }

    pub fn contains(&self, edge: Edge) -> bool {
        let (a, b) = edge;
        let hit = |c: Node, p: Node| matches!(c, Node::V(x) if self.parent[x] == Some(p));
        hit(a, b) || hit(b, a)
    }

    /// Every vertex reaches the root along parents, without cycles.
    pub fn is_valid(&self) -> bool {
        let n = self.parent.len();
        for x in 0..n {
            let mut cur = x;
            let mut steps = 0;
            loop {
                match self.parent[cur] {
                    None => {
                        if self.root != Root::Vertex(cur) {
                            return false;
                        }
                        break;
                    }
                    Some(Node::Delta) => {
                        if self.root != Root::Cemetery {
                            return false;
                        }
                        break;
                    }
                    Some(Node::V(p)) => cur = p,
                }
                steps += 1;
                if steps > n {
                    return false;
                }
            }
        }
        true
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct WilsonSample {
    pub tree: SpanningTree,
    /// Erased loops; their trivial part holds the holding times left on the
    /// tree branches.
    pub erased: LoopEnsemble,
}

struct Walker<'a> {
    e: &'a EnergyForm,
    root: Root,
    cum: Vec<Vec<(usize, f64)>>,
}

impl<'a> Walker<'a> {
    fn new(e: &'a EnergyForm, root: Root) -> Result<Self, SampleError> {
        match root {
            Root::Cemetery if !e.is_transient() => return Err(SampleError::Recurrent),
            Root::Vertex(_) if e.is_transient() => return Err(SampleError::Transient),
            Root::Vertex(r) if r >= e.len() => return Err(SampleError::Invalid(format!("root {r} out of range"))),
            _ => {}
        }
        let cum = (0..e.len())
            .map(|x| {
                let mut acc = 0.0;
                e.neighbors(x)
                    .map(|(y, c)| {
                        acc += c;
                        (y, acc)
                    })
                    .collect()
            })
            .collect();
        Ok(Self { e, root, cum })
    }

    fn step<R: Rng + ?Sized>(&self, x: usize, rng: &mut R) -> Node {
        let lam = self.e.lambda()[x];
        let u = rng.random::<f64>() * lam;
        let row = &self.cum[x];
        let total = row.last().map(|r| r.1).unwrap_or(0.0);
        if u >= total {
            if self.root == Root::Cemetery || row.is_empty() {
                return Node::Delta;
            }
            return Node::V(row[row.len() - 1].0);
        }
        let i = row.partition_point(|&(_, c)| c <= u);
        Node::V(row[i.min(row.len() - 1)].0)
    }
}

/// Wilson's algorithm with progressive loop erasure. Vertices are started in
/// `order` (default `0..n`).
pub fn wilson_sample<R: Rng + ?Sized>(
    e: &EnergyForm,
    root: Root,
    order: Option<&[usize]>,
    rng: &mut R,
) -> Result<WilsonSample, SampleError> {
    let n = e.len();
    let walker = Walker::new(e, root)?;
    let default: Vec<usize> = (0..n).collect();
    let order = order.unwrap_or(&default);
    let mut parent: Vec<Option<Node>> = vec![None; n];
    let mut in_tree = vec![false; n];
    if let Root::Vertex(r) = root {
        in_tree[r] = true;
    }
    let lambda = e.lambda();
    let mut loops = Vec::new();
    let mut trivial = DVector::zeros(n);
    let mut pos: Vec<Option<usize>> = vec![None; n];
    let mut steps = 0usize;
    for &start in order {
        if start >= n {
            return Err(SampleError::Invalid(format!("vertex {start} out of range")));
        }
        if in_tree[start] {
            continue;
        }
        let mut stack: Vec<(usize, f64)> = vec![(start, holding_time(rng, lambda[start]))];
        pos[start] = Some(0);
        let end = loop {
            let cur = stack.last().unwrap().0;
            let next = walker.step(cur, rng);
            steps += 1;
            if steps > WALK_STEP_LIMIT {
                return Err(SampleError::Guard("random walk step limit".into()));
            }
            let v = match next {
                Node::Delta => break Node::Delta,
                Node::V(v) if in_tree[v] => break Node::V(v),
                Node::V(v) => v,
            };
            if let Some(j) = pos[v] {
                let tail = stack.split_off(j);
                for &(w, _) in &tail {
                    pos[w] = None;
                }
                let (verts, holding) = tail.into_iter().unzip();
                loops.push(PointedLoop { verts, holding });
            }
            pos[v] = Some(stack.len());
            stack.push((v, holding_time(rng, lambda[v])));
        };
        for i in 0..stack.len() {
            let (v, t) = stack[i];
            parent[v] = Some(if i + 1 < stack.len() { Node::V(stack[i + 1].0) } else { end });
            in_tree[v] = true;
            pos[v] = None;
            trivial[v] += t;
        }
    }
    if in_tree.iter().any(|&b| !b) {
        return Err(SampleError::Invalid("vertex order does not cover every vertex".into()));
    }
    Ok(WilsonSample { tree: SpanningTree { root, parent }, erased: LoopEnsemble { n, alpha: 1.0, loops, trivial } })
}

/// Loop-erased walk from `x` until it is killed (or reaches a vertex root).
pub fn lerw<R: Rng + ?Sized>(e: &EnergyForm, x: usize, root: Root, rng: &mut R) -> Result<Vec<Node>, SampleError> {
    let walker = Walker::new(e, root)?;
    if x >= e.len() {
        return Err(SampleError::Invalid(format!("vertex {x} out of range")));
    }
    let mut path = vec![Node::V(x)];
    let mut cur = x;
    let mut steps = 0usize;
    if root == Root::Vertex(x) {
        return Ok(path);
    }
    loop {
        let next = walker.step(cur, rng);
        steps += 1;
        if steps > WALK_STEP_LIMIT {
            return Err(SampleError::Guard("random walk step limit".into()));
        }
        match next {
            Node::Delta => {
                path.push(Node::Delta);
                break;
            }
            Node::V(v) => {
                path.push(next);
                if root == Root::Vertex(v) {
                    break;
                }
                cur = v;
            }
        }
    }
    Ok(loop_erase(&path))
}

/// Progressive erasure: on a return to an earlier point, everything after
/// its first visit is removed.
pub fn loop_erase<T: PartialEq + Copy>(path: &[T]) -> Vec<T> {
    let mut out: Vec<T> = Vec::with_capacity(path.len());
    for &v in path {
        if let Some(j) = out.iter().position(|&w| w == v) {
            out.truncate(j + 1);
        } else {
            out.push(v);
        }
    }
    out
}

/// [`loop_erase`] for vertex paths, rejecting steps along missing edges.
pub fn loop_erase_checked(e: &EnergyForm, path: &[usize]) -> Result<Vec<usize>, SampleError> {
    if path.is_empty() {
        return Err(SampleError::Invalid("empty path".into()));
    }
    for w in path.windows(2) {
        if w[0] >= e.len() || w[1] >= e.len() || w[0] == w[1] || e.c(w[0], w[1]) <= 0.0 {
            return Err(SampleError::InvalidStep(w[0], w[1]));
        }
    }
    if path.iter().any(|&v| v >= e.len()) {
        return Err(SampleError::Invalid("vertex out of range".into()));
    }
    Ok(loop_erase(path))
}
