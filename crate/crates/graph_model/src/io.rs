use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{EnergyForm, GraphError};

/// On-disk graph description.
///
/// `vertices`, `edges` and `killing` define the energy form. The remaining
/// fields are optional metadata used by the bundled fixtures: a default root
/// for recurrent graphs, a vertex involution with the positive half of the
/// partition it exchanges, and a uniform wreath fibre size.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GraphDocument {
    pub vertices: Vec<String>,
    #[serde(default)]
    pub edges: Vec<(String, String, f64)>,
    #[serde(default)]
    pub killing: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub root: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub involution: Option<BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positive_half: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wreath_n: Option<usize>,
}

impl GraphDocument {
    pub fn parse(json: &str) -> Result<Self, GraphError> {
        serde_json::from_str(json).map_err(|e| GraphError::Malformed(e.to_string()))
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph document serializes")
    }

    pub fn to_energy_form(&self) -> Result<EnergyForm, GraphError> {
        let n = self.vertices.len();
        let mut index = HashMap::with_capacity(n);
        for (i, v) in self.vertices.iter().enumerate() {
            if index.insert(v.as_str(), i).is_some() {
                return Err(GraphError::DuplicateVertex(v.clone()));
            }
        }
        let lookup = |v: &str| index.get(v).copied().ok_or_else(|| GraphError::UnknownVertex(v.to_string()));
        let mut c = DMatrix::zeros(n, n);
        let mut given: HashMap<(usize, usize), f64> = HashMap::new();
        for (a, b, w) in &self.edges {
            let (i, j) = (lookup(a)?, lookup(b)?);
            if i == j {
                return Err(GraphError::SelfLoop(a.clone()));
            }
            if !w.is_finite() {
                return Err(GraphError::Malformed(format!("non-finite conductance on {a}-{b}")));
            }
            if *w < 0.0 {
                return Err(GraphError::NegativeConductance(a.clone(), b.clone()));
            }
            if given.contains_key(&(i, j)) {
                return Err(GraphError::DuplicateEdge(a.clone(), b.clone()));
            }
            if let Some(&back) = given.get(&(j, i)) {
                // the reverse orientation was listed already: accepted only
                // as a consistent restatement of the same symmetric weight
                if back != *w {
                    return Err(GraphError::Asymmetric(a.clone(), b.clone()));
                }
            }
            given.insert((i, j), *w);
            c[(i, j)] = *w;
            c[(j, i)] = *w;
        }
        let mut kappa = DVector::zeros(n);
        for (v, k) in &self.killing {
            kappa[lookup(v)?] = *k;
        }
        if let Some(r) = &self.root {
            lookup(r)?;
        }
        EnergyForm::new(self.vertices.clone(), c, kappa)
    }

    /// The involution as an index permutation, if present.
    pub fn involution_indices(&self, e: &EnergyForm) -> Result<Option<Vec<usize>>, GraphError> {
        let Some(map) = &self.involution else { return Ok(None) };
        let mut rho: Vec<usize> = (0..e.len()).collect();
        for (a, b) in map {
            let (i, j) = (e.vertex(a)?, e.vertex(b)?);
            rho[i] = j;
            rho[j] = i;
        }
        Ok(Some(rho))
    }
}

impl EnergyForm {
    pub fn to_document(&self) -> GraphDocument {
        let mut edges = Vec::new();
        for (i, j, w) in self.edges() {
            edges.push((self.name(i).to_string(), self.name(j).to_string(), w));
        }
        let killing = (0..self.len())
            .filter(|&i| self.killing()[i] != 0.0)
            .map(|i| (self.name(i).to_string(), self.killing()[i]))
            .collect();
        GraphDocument { vertices: self.names().to_vec(), edges, killing, ..Default::default() }
    }
}

pub fn load_energy_form(json: &str) -> Result<EnergyForm, GraphError> {
    GraphDocument::parse(json)?.to_energy_form()
}

pub fn read_graph(path: &Path) -> Result<(GraphDocument, EnergyForm), GraphError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| GraphError::Malformed(format!("{}: {e}", path.display())))?;
    let doc = GraphDocument::parse(&text)?;
    let e = doc.to_energy_form()?;
    Ok((doc, e))
}
