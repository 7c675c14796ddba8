//! Hexahedral reference elements.
//!
//! Node ordering (reference coordinates `(xi, eta, zeta)` in `[-1, 1]^3`):
//!
//! ```text
//! corners   0 (-1,-1,-1)  1 ( 1,-1,-1)  2 ( 1, 1,-1)  3 (-1, 1,-1)
//!           4 (-1,-1, 1)  5 ( 1,-1, 1)  6 ( 1, 1, 1)  7 (-1, 1, 1)
//! midsides  8 (0-1)   9 (1-2)  10 (2-3)  11 (3-0)     bottom face edges
//!          12 (4-5)  13 (5-6)  14 (6-7)  15 (7-4)     top face edges
//!          16 (0-4)  17 (1-5)  18 (2-6)  19 (3-7)     vertical edges
//! ```
//!
//! HEX8 uses the eight corners; HEX20 appends the twelve edge midsides.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ElementKind {
    #[serde(rename = "HEX8")]
    Hex8,
    #[serde(rename = "HEX20")]
    Hex20,
}

const CORNERS: [[f64; 3]; 8] = [
    [-1.0, -1.0, -1.0],
    [1.0, -1.0, -1.0],
    [1.0, 1.0, -1.0],
    [-1.0, 1.0, -1.0],
    [-1.0, -1.0, 1.0],
    [1.0, -1.0, 1.0],
    [1.0, 1.0, 1.0],
    [-1.0, 1.0, 1.0],
];

/// Corner pairs of the twelve edges, in midside-node order.
pub const EDGES: [[usize; 2]; 12] = [
    [0, 1],
    [1, 2],
    [2, 3],
    [3, 0],
    [4, 5],
    [5, 6],
    [6, 7],
    [7, 4],
    [0, 4],
    [1, 5],
    [2, 6],
    [3, 7],
];

impl ElementKind {
    pub fn nodes_per_element(self) -> usize {
        match self {
            ElementKind::Hex8 => 8,
            ElementKind::Hex20 => 20,
        }
    }

    /// Reference coordinates of every element node.
    pub fn reference_nodes(self) -> Vec<[f64; 3]> {
        let mut nodes = CORNERS.to_vec();
        if self == ElementKind::Hex20 {
            for [a, b] in EDGES {
                let (p, q) = (CORNERS[a], CORNERS[b]);
                nodes.push([
                    0.5 * (p[0] + q[0]),
                    0.5 * (p[1] + q[1]),
                    0.5 * (p[2] + q[2]),
                ]);
            }
        }
        nodes
    }

    /// Shape function values and reference-coordinate gradients at `xi`.
    pub fn shape(self, xi: [f64; 3]) -> (Vec<f64>, Vec<[f64; 3]>) {
        let n = self.nodes_per_element();
        let mut values = Vec::with_capacity(n);
        let mut grads = Vec::with_capacity(n);
        match self {
            ElementKind::Hex8 => {
                for c in CORNERS {
                    let f = [1.0 + c[0] * xi[0], 1.0 + c[1] * xi[1], 1.0 + c[2] * xi[2]];
                    values.push(0.125 * f[0] * f[1] * f[2]);
                    grads.push([
                        0.125 * c[0] * f[1] * f[2],
                        0.125 * c[1] * f[0] * f[2],
                        0.125 * c[2] * f[0] * f[1],
                    ]);
                }
            }
            ElementKind::Hex20 => {
                for c in CORNERS {
                    let f = [1.0 + c[0] * xi[0], 1.0 + c[1] * xi[1], 1.0 + c[2] * xi[2]];
                    let s = c[0] * xi[0] + c[1] * xi[1] + c[2] * xi[2] - 2.0;
                    values.push(0.125 * f[0] * f[1] * f[2] * s);
                    grads.push([
                        0.125 * c[0] * f[1] * f[2] * (s + f[0]),
                        0.125 * c[1] * f[0] * f[2] * (s + f[1]),
                        0.125 * c[2] * f[0] * f[1] * (s + f[2]),
                    ]);
                }
                for node in &self.reference_nodes()[8..] {
                    // exactly one reference coordinate of a midside node is zero
                    let zero = (0..3).find(|&d| node[d] == 0.0).expect("midside node");
                    let mut g = [0.0; 3];
                    let mut prod = 1.0;
                    let mut factors = [0.0; 3];
                    for d in 0..3 {
                        factors[d] = if d == zero {
                            1.0 - xi[d] * xi[d]
                        } else {
                            1.0 + node[d] * xi[d]
                        };
                        prod *= factors[d];
                    }
                    for d in 0..3 {
                        let deriv = if d == zero { -2.0 * xi[d] } else { node[d] };
                        let others: f64 = (0..3).filter(|&e| e != d).map(|e| factors[e]).product();
                        g[d] = 0.25 * deriv * others;
                    }
                    values.push(0.25 * prod);
                    grads.push(g);
                }
            }
        }
        (values, grads)
    }

    /// Full tensor-product Gauss rule: 2x2x2 for HEX8, 3x3x3 for HEX20.
    pub fn gauss_rule(self) -> Vec<([f64; 3], f64)> {
        let (pts, wts): (Vec<f64>, Vec<f64>) = match self {
            ElementKind::Hex8 => {
                let a = 1.0 / 3f64.sqrt();
                (vec![-a, a], vec![1.0, 1.0])
            }
            ElementKind::Hex20 => {
                let a = (0.6f64).sqrt();
                (vec![-a, 0.0, a], vec![5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])
            }
        };
        let mut rule = Vec::with_capacity(pts.len().pow(3));
        for (k, &z) in pts.iter().enumerate() {
            for (j, &y) in pts.iter().enumerate() {
                for (i, &x) in pts.iter().enumerate() {
                    rule.push(([x, y, z], wts[i] * wts[j] * wts[k]));
                }
            }
        }
        rule
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_kronecker(kind: ElementKind) {
        let nodes = kind.reference_nodes();
        for (a, xa) in nodes.iter().enumerate() {
            let (n, _) = kind.shape(*xa);
            for (b, v) in n.iter().enumerate() {
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((v - expect).abs() < 1e-14, "{kind:?} N{b}({a}) = {v}");
            }
        }
    }

    #[test]
    fn shape_functions_interpolate_nodes() {
        check_kronecker(ElementKind::Hex8);
        check_kronecker(ElementKind::Hex20);
    }

    #[test]
    fn partition_of_unity_and_gradients() {
        for kind in [ElementKind::Hex8, ElementKind::Hex20] {
            for xi in [[0.1, -0.3, 0.7], [0.9, 0.2, -0.5], [0.0, 0.0, 0.0]] {
                let (n, g) = kind.shape(xi);
                assert!((n.iter().sum::<f64>() - 1.0).abs() < 1e-14);
                for d in 0..3 {
                    assert!(g.iter().map(|v| v[d]).sum::<f64>().abs() < 1e-13);
                }
                // finite-difference check of gradients
                let h = 1e-6;
                for d in 0..3 {
                    let (mut p, mut m) = (xi, xi);
                    p[d] += h;
                    m[d] -= h;
                    let (np, _) = kind.shape(p);
                    let (nm, _) = kind.shape(m);
                    for a in 0..n.len() {
                        let fd = (np[a] - nm[a]) / (2.0 * h);
                        assert!((fd - g[a][d]).abs() < 1e-8);
                    }
                }
            }
        }
    }

    #[test]
    fn gauss_weights_sum_to_volume() {
        for kind in [ElementKind::Hex8, ElementKind::Hex20] {
            let w: f64 = kind.gauss_rule().iter().map(|(_, w)| w).sum();
            assert!((w - 8.0).abs() < 1e-13);
        }
    }
}
