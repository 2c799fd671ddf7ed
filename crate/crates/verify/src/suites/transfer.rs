use std::collections::HashMap;
use std::time::Instant;

use exact_engine::{edge_conductance, edge_key, transfer_matrix, tree_edges, Edge, Node, Root, TreeGreen};
use graph_model::EnergyForm;
use samplers::wilson_sample;

use crate::stats::{chi_square, mean_se, proportion};
use crate::{draw_many, purpose, timed, Check, VerificationReport, VerifyError, P_MIN, TOL_LINALG};

const EXHAUSTIVE_MAX_VERTICES: usize = 4;
const CHI_SQUARE_MAX_TREES: usize = 500;

fn node_index(n: usize, v: Node) -> usize {
    match v {
        Node::V(i) => i,
        Node::Delta => n,
    }
}

fn find(parent: &mut [usize], mut a: usize) -> usize {
    while parent[a] != a {
        parent[a] = parent[parent[a]];
        a = parent[a];
    }
    a
}

/// Every spanning tree (as a sorted edge list) with weight `∏ C`.
pub fn spanning_trees(e: &EnergyForm, root: Root) -> Vec<(Vec<Edge>, f64)> {
    let edges = tree_edges(e, root);
    let n = e.len();
    let nodes = if root == Root::Cemetery { n + 1 } else { n };
    let need = nodes - 1;
    let mut out = Vec::new();
    let m = edges.len();
    let mut chosen: Vec<usize> = Vec::with_capacity(need);
    fn rec(
        e: &EnergyForm,
        edges: &[Edge],
        nodes: usize,
        need: usize,
        from: usize,
        chosen: &mut Vec<usize>,
        out: &mut Vec<(Vec<Edge>, f64)>,
    ) {
        if chosen.len() == need {
            let mut parent: Vec<usize> = (0..nodes).collect();
            let n = e.len();
            for &i in chosen.iter() {
                let (a, b) = edges[i];
                let (ra, rb) = (find(&mut parent, node_index(n, a)), find(&mut parent, node_index(n, b)));
                if ra == rb {
                    return;
                }
                parent[ra] = rb;
            }
            let mut t: Vec<Edge> = chosen.iter().map(|&i| edges[i]).collect();
            t.sort();
            let w = t.iter().map(|&ed| edge_conductance(e, ed)).product();
            out.push((t, w));
            return;
        }
        for i in from..edges.len() {
            if edges.len() - i < need - chosen.len() {
                break;
            }
            chosen.push(i);
            rec(e, edges, nodes, need, i + 1, chosen, out);
            chosen.pop();
        }
    }
    if m >= need {
        rec(e, &edges, nodes, need, 0, &mut chosen, &mut out);
    }
    out
}

fn set_label(e: &EnergyForm, set: &[Edge]) -> String {
    set.iter().map(|(a, b)| format!("{}-{}", a.label(e), b.label(e))).collect::<Vec<_>>().join("+")
}

fn fixture_g(m: usize) -> Vec<f64> {
    (0..m).map(|i| 0.3 + 0.2 * (i % 3) as f64).collect()
}

/// Transfer current theorem, Kirchhoff's formula, the determinantal Laplace
/// transform and negative association, against Wilson's algorithm.
pub fn verify_transfer_current(
    e: &EnergyForm,
    fixture: &str,
    root: Root,
    edge_sets: &[Vec<Edge>],
    n: usize,
    seed: u64,
) -> Result<VerificationReport, VerifyError> {
    let start = Instant::now();
    let mut r = VerificationReport::new("transfer_current", fixture, n, seed);
    let sets: Vec<Vec<Edge>> = edge_sets.iter().map(|s| s.iter().map(|&(a, b)| edge_key(a, b)).collect()).collect();
    if let Some(s) = sets.iter().find(|s| s.len() > 5) {
        return Err(VerifyError::Precondition(format!("edge set of size {} > 5", s.len())));
    }
    let all = tree_edges(e, root);
    let index: HashMap<Edge, usize> = all.iter().enumerate().map(|(i, &ed)| (ed, i)).collect();
    for s in &sets {
        for ed in s {
            if !index.contains_key(ed) {
                return Err(VerifyError::Precondition(format!("{}-{} is not a tree edge", ed.0.label(e), ed.1.label(e))));
            }
        }
    }
    let tg = TreeGreen::new(e, root)?;
    let tm = transfer_matrix(e, &all, root)?;
    let prob = |s: &[Edge]| tm.inclusion_probability(&s.iter().map(|ed| index[ed]).collect::<Vec<_>>());
    let exact: Vec<f64> = sets.iter().map(|s| prob(s)).collect();

    // Kirchhoff for single edges
    for ((a, b), c) in all.iter().zip(&tm.conductances) {
        let kirch = c * (tg.at(*a, *a) + tg.at(*b, *b) - 2.0 * tg.at(*a, *b));
        r.push(Check::residual(format!("kirchhoff[{}]", set_label(e, &[(*a, *b)])), kirch, prob(&[(*a, *b)]), TOL_LINALG));
    }

    let g = fixture_g(all.len());
    let laplace = tm.edge_laplace(&g);

    let trees = (e.len() <= EXHAUSTIVE_MAX_VERTICES).then(|| spanning_trees(e, root));
    if let Some(trees) = &trees {
        let z: f64 = trees.iter().map(|t| t.1).sum();
        r.push(Check::relative("matrix_tree_total", 1.0, z * tg.log_z.exp(), TOL_LINALG));
        for (s, &want) in sets.iter().zip(&exact) {
            let p: f64 = trees.iter().filter(|(t, _)| s.iter().all(|ed| t.contains(ed))).map(|t| t.1).sum::<f64>() / z;
            r.push(Check::residual(format!("exhaustive_inclusion[{}]", set_label(e, s)), p, want, TOL_LINALG));
        }
        let lap: f64 = trees
            .iter()
            .map(|(t, w)| w / z * (-t.iter().map(|ed| g[index[ed]]).sum::<f64>()).exp())
            .sum();
        r.push(Check::residual("exhaustive_laplace", lap, laplace, TOL_LINALG));
    }

    let mut pairs = Vec::new();
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            if sets[i].iter().all(|ed| !sets[j].contains(ed)) && sets[i].len() + sets[j].len() <= 5 {
                let mut u = sets[i].clone();
                u.extend(sets[j].iter().copied());
                let pu = prob(&u);
                r.push(Check::upper(
                    format!("negative_association[{} | {}]", set_label(e, &sets[i]), set_label(e, &sets[j])),
                    exact[i] * exact[j],
                    pu,
                    1e-12,
                ));
                pairs.push((i, j, u));
            }
        }
    }

    if n > 0 {
        let samples = draw_many(seed, purpose::WILSON, n, |rng| Ok(wilson_sample(e, root, None, rng)?.tree.edges()))?;
        let hits = |s: &[Edge]| samples.iter().filter(|t| s.iter().all(|ed| t.binary_search(ed).is_ok())).count();
        let mut freq = Vec::with_capacity(sets.len());
        for (s, &want) in sets.iter().zip(&exact) {
            let (p, se) = proportion(hits(s), n);
            freq.push((p, se));
            r.push(Check::z(format!("inclusion[{}]", set_label(e, s)), want, p, se));
        }
        for (i, j, u) in &pairs {
            let (pu, su) = proportion(hits(u), n);
            let (p1, s1) = freq[*i];
            let (p2, s2) = freq[*j];
            let se = (su * su + (p2 * s1).powi(2) + (p1 * s2).powi(2)).sqrt();
            r.push(Check::upper(
                format!("empirical_negative_association[{} | {}]", set_label(e, &sets[*i]), set_label(e, &sets[*j])),
                p1 * p2,
                pu,
                4.0 * se,
            ));
        }
        let lap: Vec<f64> = samples.iter().map(|t| (-t.iter().map(|ed| g[index[ed]]).sum::<f64>()).exp()).collect();
        let (m, se) = mean_se(&lap);
        r.push(Check::z("edge_laplace", laplace, m, se));
        if let Some(trees) = trees.filter(|t| t.len() <= CHI_SQUARE_MAX_TREES) {
            let z: f64 = trees.iter().map(|t| t.1).sum();
            let pos: HashMap<&Vec<Edge>, usize> = trees.iter().enumerate().map(|(i, t)| (&t.0, i)).collect();
            let mut counts = vec![0u64; trees.len()];
            for t in &samples {
                match pos.get(t) {
                    Some(&i) => counts[i] += 1,
                    None => return Err(VerifyError::Invalid("sampled tree is not a spanning tree".into())),
                }
            }
            let probs: Vec<f64> = trees.iter().map(|t| t.1 / z).collect();
            let cs = chi_square(&counts, &probs);
            r.push(Check::p_value(format!("tree_law_chi_square[{} trees, df {}]", trees.len(), cs.df), cs.statistic, cs.p, P_MIN));
        }
    }
    Ok(timed(r.finalize(), start))
}
