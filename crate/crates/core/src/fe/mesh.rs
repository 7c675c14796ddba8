use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::element::ElementKind;
use crate::error::{Error, Result};

/// Hexahedral mesh with named node sets and homogeneous Dirichlet constraints.
///
/// The JSON form has the fields `nodes`, `elements`, `kind`, `node_sets` and
/// `dirichlet` (a list of `[node, direction]` pairs, direction 0/1/2 for x/y/z).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    pub nodes: Vec<[f64; 3]>,
    pub elements: Vec<Vec<usize>>,
    pub kind: ElementKind,
    #[serde(default)]
    pub node_sets: BTreeMap<String, Vec<usize>>,
    #[serde(default)]
    pub dirichlet: Vec<(usize, usize)>,
}

impl Mesh {
    pub fn validate(&self) -> Result<()> {
        let npe = self.kind.nodes_per_element();
        let nn = self.nodes.len();
        if self.elements.is_empty() {
            return Err(Error::InvalidMesh("mesh has no elements".into()));
        }
        let mut used = vec![false; nn];
        for (e, conn) in self.elements.iter().enumerate() {
            if conn.len() != npe {
                return Err(Error::InvalidMesh(format!(
                    "element {e} has {} nodes, {:?} needs {npe}",
                    conn.len(),
                    self.kind
                )));
            }
            for &n in conn {
                if n >= nn {
                    return Err(Error::InvalidMesh(format!(
                        "element {e} references node {n} of {nn}"
                    )));
                }
                used[n] = true;
            }
        }
        if let Some(n) = used.iter().position(|u| !u) {
            return Err(Error::InvalidMesh(format!("node {n} belongs to no element")));
        }
        for &(n, d) in &self.dirichlet {
            if n >= nn || d > 2 {
                return Err(Error::InvalidMesh(format!("invalid Dirichlet dof ({n}, {d})")));
            }
        }
        for (name, set) in &self.node_sets {
            if let Some(&n) = set.iter().find(|&&n| n >= nn) {
                return Err(Error::InvalidMesh(format!("node set {name} references node {n}")));
            }
        }
        Ok(())
    }

    pub fn node_set(&self, name: &str) -> Result<&[usize]> {
        match self.node_sets.get(name) {
            Some(s) if !s.is_empty() => Ok(s),
            Some(_) => Err(Error::InvalidMesh(format!("node set {name} is empty"))),
            None => Err(Error::InvalidMesh(format!("no node set named {name}"))),
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let mesh: Mesh = serde_json::from_str(s)?;
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bounding_box(&self) -> ([f64; 3], [f64; 3]) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in &self.nodes {
            for d in 0..3 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        (lo, hi)
    }

    /// Node closest to `point`.
    pub fn nearest_node(&self, point: [f64; 3]) -> usize {
        let dist = |p: &[f64; 3]| (0..3).map(|d| (p[d] - point[d]).powi(2)).sum::<f64>();
        (0..self.nodes.len())
            .min_by(|&a, &b| dist(&self.nodes[a]).total_cmp(&dist(&self.nodes[b])))
            .expect("non-empty mesh")
    }
}

/// Numbering of unconstrained dofs; Dirichlet dofs are eliminated.
#[derive(Clone, Debug, PartialEq)]
pub struct DofMap {
    index: Vec<Option<usize>>,
    free: Vec<(usize, usize)>,
}

impl DofMap {
    pub fn new(mesh: &Mesh) -> Self {
        let fixed: BTreeSet<(usize, usize)> = mesh.dirichlet.iter().copied().collect();
        let mut index = vec![None; 3 * mesh.nodes.len()];
        let mut free = Vec::new();
        for node in 0..mesh.nodes.len() {
            for dir in 0..3 {
                if !fixed.contains(&(node, dir)) {
                    index[3 * node + dir] = Some(free.len());
                    free.push((node, dir));
                }
            }
        }
        DofMap { index, free }
    }

    /// Number of free dofs.
    pub fn len(&self) -> usize {
        self.free.len()
    }

    pub fn is_empty(&self) -> bool {
        self.free.is_empty()
    }

    pub fn dof(&self, node: usize, dir: usize) -> Option<usize> {
        self.index[3 * node + dir]
    }

    /// `(node, direction)` of free dof `i`.
    pub fn node_dir(&self, i: usize) -> (usize, usize) {
        self.free[i]
    }

    /// Scatter a reduced vector into a full per-node displacement list.
    pub fn expand(&self, x: &[f64]) -> Vec<[f64; 3]> {
        let mut out = vec![[0.0; 3]; self.index.len() / 3];
        for (i, &(n, d)) in self.free.iter().enumerate() {
            out[n][d] = x[i];
        }
        out
    }

    /// Gather a reduced vector from per-node values (constrained entries dropped).
    pub fn restrict(&self, nodal: &[[f64; 3]]) -> Vec<f64> {
        self.free.iter().map(|&(n, d)| nodal[n][d]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube() -> Mesh {
        let mut nodes = Vec::new();
        for k in 0..2 {
            for (i, j) in [(0, 0), (1, 0), (1, 1), (0, 1)] {
                nodes.push([i as f64, j as f64, k as f64]);
            }
        }
        Mesh {
            nodes,
            elements: vec![(0..8).collect()],
            kind: ElementKind::Hex8,
            node_sets: BTreeMap::new(),
            dirichlet: vec![(0, 0), (0, 1)],
        }
    }

    #[test]
    fn json_round_trip() {
        let m = cube();
        let s = m.to_json_string().unwrap();
        assert!(s.contains("\"kind\":\"HEX8\""));
        let back = Mesh::from_json_str(&s).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn validation_catches_bad_connectivity() {
        let mut m = cube();
        m.elements[0][3] = 42;
        assert!(m.validate().is_err());
        let mut m = cube();
        m.elements[0].pop();
        assert!(m.validate().is_err());
        let mut m = cube();
        m.nodes.push([5.0, 5.0, 5.0]);
        assert!(m.validate().is_err());
        let mut m = cube();
        m.dirichlet.push((0, 3));
        assert!(m.validate().is_err());
    }

    #[test]
    fn dof_map_eliminates_dirichlet_dofs() {
        let m = cube();
        let map = DofMap::new(&m);
        assert_eq!(map.len(), 22);
        assert_eq!(map.dof(0, 0), None);
        assert_eq!(map.dof(0, 2), Some(0));
        let x: Vec<f64> = (0..22).map(|i| i as f64).collect();
        assert_eq!(map.restrict(&map.expand(&x)), x);
    }
}
