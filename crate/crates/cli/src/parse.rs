use std::collections::BTreeMap;

use exact_engine::{Edge, Node, Root};
use graph_model::{EnergyForm, VertexSubset};
use nalgebra::DVector;

use crate::CliError;

fn vertex(e: &EnergyForm, flag: &str, name: &str) -> Result<usize, CliError> {
    e.vertex(name.trim()).map_err(|_| CliError::Usage(format!("{flag}: unknown vertex '{}'", name.trim())))
}

/// `a,b,c` as vertex indices, in order and with repeats.
pub fn points(e: &EnergyForm, flag: &str, s: &str) -> Result<Vec<usize>, CliError> {
    let pts: Vec<usize> = s.split(',').filter(|t| !t.trim().is_empty()).map(|t| vertex(e, flag, t)).collect::<Result<_, _>>()?;
    if pts.is_empty() {
        return Err(CliError::Usage(format!("{flag}: empty vertex list")));
    }
    Ok(pts)
}

pub fn subset(e: &EnergyForm, flag: &str, s: &str) -> Result<VertexSubset, CliError> {
    VertexSubset::new(e.len(), points(e, flag, s)?).map_err(|err| CliError::Usage(format!("{flag}: {err}")))
}

pub fn single(e: &EnergyForm, flag: &str, s: &str) -> Result<usize, CliError> {
    match points(e, flag, s)?.as_slice() {
        [x] => Ok(*x),
        _ => Err(CliError::Usage(format!("{flag}: expected one vertex"))),
    }
}

/// A JSON object `{"vertex": value}`; missing vertices get 0.
pub fn chi(e: &EnergyForm, s: &str) -> Result<DVector<f64>, CliError> {
    let map: BTreeMap<String, f64> =
        serde_json::from_str(s).map_err(|err| CliError::Usage(format!("--chi: expected a JSON object of vertex weights ({err})")))?;
    let mut v = DVector::zeros(e.len());
    for (name, w) in map {
        if !(w >= 0.0 && w.is_finite()) {
            return Err(CliError::Usage(format!("--chi: weight {w} at '{name}' must be finite and nonnegative")));
        }
        v[vertex(e, "--chi", &name)?] = w;
    }
    Ok(v)
}

fn node(e: &EnergyForm, s: &str) -> Result<Node, CliError> {
    match s.trim() {
        "delta" | "Δ" => Ok(Node::Delta),
        v => Ok(Node::V(vertex(e, "--edges", v)?)),
    }
}

/// `a-b,b-c;a-c`: edge sets separated by `;`.
pub fn edge_sets(e: &EnergyForm, s: &str) -> Result<Vec<Vec<Edge>>, CliError> {
    s.split(';')
        .filter(|set| !set.trim().is_empty())
        .map(|set| {
            set.split(',')
                .map(|pair| {
                    let (a, b) = pair
                        .split_once('-')
                        .ok_or_else(|| CliError::Usage(format!("--edges: '{pair}' is not of the form a-b")))?;
                    Ok((node(e, a)?, node(e, b)?))
                })
                .collect()
        })
        .collect()
}

pub fn root(e: &EnergyForm, s: Option<&str>) -> Result<Root, CliError> {
    match s {
        Some(v) => Ok(Root::Vertex(vertex(e, "--root", v)?)),
        None => Ok(Root::Cemetery),
    }
}

pub fn alpha(a: f64) -> Result<f64, CliError> {
    if a > 0.0 && a.is_finite() {
        Ok(a)
    } else {
        Err(CliError::Usage(format!("--alpha: {a} must be positive")))
    }
}

pub fn node_name(e: &EnergyForm, n: Node) -> String {
    match n {
        Node::V(i) => e.name(i).to_string(),
        Node::Delta => "delta".to_string(),
    }
}
