//! Small graphs with known closed forms, used by tests and written to disk by
//! `loopsoup fixtures`.

use std::collections::BTreeMap;

use crate::GraphDocument;

fn doc(vertices: &[&str], edges: &[(&str, &str, f64)], killing: &[(&str, f64)], description: &str) -> GraphDocument {
    GraphDocument {
        vertices: vertices.iter().map(|s| s.to_string()).collect(),
        edges: edges.iter().map(|(a, b, w)| (a.to_string(), b.to_string(), *w)).collect(),
        killing: killing.iter().map(|(v, k)| (v.to_string(), *k)).collect(),
        description: Some(description.to_string()),
        ..Default::default()
    }
}

/// Complete graph on `n` vertices named `v0..`, conductance `c`, killing `kappa`.
pub fn complete(n: usize, c: f64, kappa: f64) -> GraphDocument {
    let names: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            edges.push((names[i].clone(), names[j].clone(), c));
        }
    }
    let killing = if kappa > 0.0 { names.iter().map(|v| (v.clone(), kappa)).collect() } else { BTreeMap::new() };
    GraphDocument {
        vertices: names,
        edges,
        killing,
        description: Some(format!("complete graph K{n}, C={c}, kappa={kappa}")),
        ..Default::default()
    }
}

/// Two vertices, one unit edge, unit killing at both ends. `G = [[2,1],[1,2]]/3`.
pub fn p2() -> GraphDocument {
    doc(&["x", "y"], &[("x", "y", 1.0)], &[("x", 1.0), ("y", 1.0)], "P2: C_xy=1, kappa=1 at x and y; G=(1/3)[[2,1],[1,2]]")
}

/// One vertex with killing 2.
pub fn v1() -> GraphDocument {
    doc(&["x"], &[], &[("x", 2.0)], "V1: single vertex, kappa=2, no edges; G=1/2")
}

/// K4 with unit conductances and unit killing. `G = (I + J)/5`.
pub fn k4c1() -> GraphDocument {
    let v = ["a", "b", "c", "d"];
    let mut edges = Vec::new();
    for i in 0..4 {
        for j in i + 1..4 {
            edges.push((v[i], v[j], 1.0));
        }
    }
    let kill: Vec<(&str, f64)> = v.iter().map(|s| (*s, 1.0)).collect();
    doc(&v, &edges, &kill, "K4c1: complete graph on 4 vertices, all C=1, all kappa=1; G=(1/5)(I+J)")
}

/// Recurrent K4 (no killing), rooted at `a`; 16 spanning trees.
pub fn k4_rooted() -> GraphDocument {
    let mut d = k4c1();
    d.killing.clear();
    d.root = Some("a".into());
    d.description = Some("K4 with unit conductances, no killing, spanning trees rooted at a (16 trees)".into());
    d
}

/// 3-cube with unit conductances, no killing. Vertices are bit strings.
pub fn cube() -> GraphDocument {
    let names: Vec<String> = (0..8).map(|i| format!("{:03b}", i)).collect();
    let mut edges = Vec::new();
    for i in 0..8usize {
        for b in 0..3 {
            let j = i ^ (1 << b);
            if i < j {
                edges.push((names[i].clone(), names[j].clone(), 1.0));
            }
        }
    }
    GraphDocument {
        vertices: names,
        edges,
        description: Some("3-cube, unit conductances, no killing (zeta fixture; N_4=48)".into()),
        ..Default::default()
    }
}

/// Prism over the square a-b-d-c with the sides ab, cd, ac, bd of both faces
/// subdivided by midpoints alpha, beta, gamma, delta. The vertical edges join
/// x and -x, and rho(x) = -x swaps the two faces. All C = kappa = 1.
pub fn counterexample() -> GraphDocument {
    let top = ["a", "b", "c", "d", "alpha", "beta", "gamma", "delta"];
    let sides = [("a", "alpha", "b"), ("c", "beta", "d"), ("a", "gamma", "c"), ("b", "delta", "d")];
    let neg = |s: &str| format!("-{s}");
    let mut vertices: Vec<String> = top.iter().map(|s| s.to_string()).collect();
    vertices.extend(top.iter().map(|s| neg(s)));
    let mut edges = Vec::new();
    for (u, m, v) in sides {
        for (p, q) in [(u, m), (m, v)] {
            edges.push((p.to_string(), q.to_string(), 1.0));
            edges.push((neg(p), neg(q), 1.0));
        }
    }
    for x in ["a", "b", "c", "d"] {
        edges.push((x.to_string(), neg(x), 1.0));
    }
    let killing = vertices.iter().map(|v| (v.clone(), 1.0)).collect();
    let involution = top.iter().map(|s| (s.to_string(), neg(s))).collect();
    GraphDocument {
        vertices,
        edges,
        killing,
        description: Some(
            "square a-b-d-c and its mirror -a,-b,-d,-c joined by x~-x; sides ab, cd, ac, bd of each face \
             carry midpoints alpha, beta, gamma, delta; all C=kappa=1; rho(x)=-x"
                .into(),
        ),
        involution: Some(involution),
        positive_half: Some(top.iter().map(|s| s.to_string()).collect()),
        ..Default::default()
    }
}

/// Triangle with unit conductances and killing; wreath fibre size 2 (24 states).
pub fn k3_wreath() -> GraphDocument {
    let mut d = doc(
        &["a", "b", "c"],
        &[("a", "b", 1.0), ("b", "c", 1.0), ("a", "c", 1.0)],
        &[("a", 1.0), ("b", 1.0), ("c", 1.0)],
        "K3, all C=1, all kappa=1; wreath product with n=2 at every vertex has 24 states",
    );
    d.wreath_n = Some(2);
    d
}

pub fn single_edge() -> GraphDocument {
    doc(&["a", "b"], &[("a", "b", 1.0)], &[], "single unit edge, no killing (a tree: IZ = 1)")
}

/// Two copies of P2 exchanged by rho; cross conductances C_{x,rho(y)} form the
/// positive definite matrix [[1, 1/2], [1/2, 1]].
pub fn p2_mirror() -> GraphDocument {
    let mut d = doc(
        &["x+", "y+", "x-", "y-"],
        &[
            ("x+", "y+", 1.0),
            ("x-", "y-", 1.0),
            ("x+", "x-", 1.0),
            ("y+", "y-", 1.0),
            ("x+", "y-", 0.5),
            ("y+", "x-", 0.5),
        ],
        &[("x+", 1.0), ("y+", 1.0), ("x-", 1.0), ("y-", 1.0)],
        "two copies of P2 swapped by rho; cross matrix C_{x,rho(y)} = [[1,0.5],[0.5,1]]",
    );
    d.involution = Some([("x+", "x-"), ("y+", "y-")].iter().map(|(a, b)| (a.to_string(), b.to_string())).collect());
    d.positive_half = Some(vec!["x+".into(), "y+".into()]);
    d
}

/// Everything written by `loopsoup fixtures`, keyed by file name.
pub fn all() -> Vec<(&'static str, GraphDocument)> {
    vec![
        ("p2.json", p2()),
        ("v1.json", v1()),
        ("k4c1.json", k4c1()),
        ("k4_rooted.json", k4_rooted()),
        ("cube.json", cube()),
        ("counterexample.json", counterexample()),
        ("k3_wreath.json", k3_wreath()),
        ("single_edge.json", single_edge()),
        ("p2_mirror.json", p2_mirror()),
    ]
}
