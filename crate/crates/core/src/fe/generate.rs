//! Structured mesh generators for the beam and disc test structures.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

use super::element::ElementKind;
use super::mesh::Mesh;
use crate::error::{Error, Result};

/// Lattice offsets of the element nodes: every reference coordinate in {-1, 0, 1}
/// maps to {0, s/2, s} where `s` is the lattice step of one element.
fn node_offsets(kind: ElementKind) -> (usize, Vec<[usize; 3]>) {
    let step = match kind {
        ElementKind::Hex8 => 1,
        ElementKind::Hex20 => 2,
    };
    let offsets = kind
        .reference_nodes()
        .iter()
        .map(|r| {
            let mut o = [0; 3];
            for d in 0..3 {
                o[d] = ((r[d] + 1.0) * step as f64 / 2.0).round() as usize;
            }
            o
        })
        .collect();
    (step, offsets)
}

/// A lattice point hosts a node if it is a corner (HEX8) or has at most one
/// odd index (HEX20 corners and edge midsides).
fn is_node(kind: ElementKind, idx: [usize; 3]) -> bool {
    match kind {
        ElementKind::Hex8 => true,
        ElementKind::Hex20 => idx.iter().filter(|&&i| i % 2 == 1).count() <= 1,
    }
}

/// Symmetric lattice coordinate `extent * (2i - n) / (2n)`, exactly antisymmetric in `i`.
fn centered(extent: f64, i: usize, n: usize) -> f64 {
    extent * (2 * i as i64 - n as i64) as f64 / (2 * n) as f64
}

/// Structured clamped/free beam along x.
///
/// `nx` elements along the length (x), `ny` across the height (y, the bending
/// direction) and `nz` across the width (z). The cross-section is centred on
/// the x axis. Node sets: `midline` (y = 0, z = 0), `upper_line` (y = h/2, z = 0),
/// `lateral_line` (y = 0, z = w/2), `upper_lateral_line` (y = h/2, z = w/2),
/// `clamp_left` (x = 0) and `clamp_right` (x = L). With `clamp_both_ends`
/// every dof of both end faces is fixed.
#[allow(clippy::too_many_arguments)]
pub fn generate_beam_mesh(
    length: f64,
    width: f64,
    height: f64,
    nx: usize,
    ny: usize,
    nz: usize,
    kind: ElementKind,
    clamp_both_ends: bool,
) -> Result<Mesh> {
    for (name, v) in [("length", length), ("width", width), ("height", height)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidArgument(format!("beam {name} must be positive, got {v}")));
        }
    }
    if nx == 0 || ny == 0 || nz == 0 {
        return Err(Error::InvalidArgument(format!(
            "element counts must be at least 1, got ({nx}, {ny}, {nz})"
        )));
    }
    let (step, offsets) = node_offsets(kind);
    let dims = [step * nx + 1, step * ny + 1, step * nz + 1];
    let mut id = vec![usize::MAX; dims[0] * dims[1] * dims[2]];
    let lin = |i: usize, j: usize, k: usize| (i * dims[1] + j) * dims[2] + k;
    let mut nodes = Vec::new();
    let mut sets: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    let (jc, kc) = (step * ny, step * nz);
    for i in 0..dims[0] {
        for j in 0..dims[1] {
            for k in 0..dims[2] {
                if !is_node(kind, [i, j, k]) {
                    continue;
                }
                let n = nodes.len();
                id[lin(i, j, k)] = n;
                let x = length * i as f64 / (step * nx) as f64;
                nodes.push([x, centered(height, j, jc), centered(width, k, kc)]);
                let yc = 2 * j == jc;
                let zc = 2 * k == kc;
                let ytop = j == jc;
                let zside = k == kc;
                let mut tag = |name: &str| sets.entry(name.to_string()).or_default().push(n);
                if yc && zc {
                    tag("midline");
                }
                if ytop && zc {
                    tag("upper_line");
                }
                if yc && zside {
                    tag("lateral_line");
                }
                if ytop && zside {
                    tag("upper_lateral_line");
                }
                if i == 0 {
                    tag("clamp_left");
                }
                if i == dims[0] - 1 {
                    tag("clamp_right");
                }
            }
        }
    }
    let mut elements = Vec::with_capacity(nx * ny * nz);
    for ex in 0..nx {
        for ey in 0..ny {
            for ez in 0..nz {
                let base = [ex * step, ey * step, ez * step];
                elements.push(
                    offsets
                        .iter()
                        .map(|o| id[lin(base[0] + o[0], base[1] + o[1], base[2] + o[2])])
                        .collect(),
                );
            }
        }
    }
    let mut dirichlet = Vec::new();
    if clamp_both_ends {
        let mut clamped: Vec<usize> = sets["clamp_left"].clone();
        clamped.extend(&sets["clamp_right"]);
        clamped.sort_unstable();
        for n in clamped {
            for d in 0..3 {
                dirichlet.push((n, d));
            }
        }
    }
    let mesh = Mesh { nodes, elements, kind, node_sets: sets, dirichlet };
    mesh.validate()?;
    Ok(mesh)
}

/// Block layout of the disc mesh.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OgridParams {
    /// Elements along each side of the central square.
    pub square_cells: usize,
    /// Elements radially between the square and the rim.
    pub radial_cells: usize,
    pub thickness_layers: usize,
    /// Half-width of the central square as a fraction of the radius.
    pub inner_fraction: f64,
}

impl OgridParams {
    /// Layout derived from a single refinement level `n`: an `n x n` central
    /// square, `round(1.1 n)` radial cells and two layers through the thickness.
    /// `n = 10` gives 540 elements per face.
    pub fn from_refinement(n: usize) -> Self {
        OgridParams {
            square_cells: n,
            radial_cells: ((11 * n) as f64 / 10.0).round() as usize,
            thickness_layers: 2,
            inner_fraction: 0.35,
        }
    }

    pub fn face_elements(&self) -> usize {
        self.square_cells * self.square_cells + 4 * self.square_cells * self.radial_cells
    }
}

/// Merges coincident points produced by different blocks.
struct PointPool {
    tol: f64,
    cell: f64,
    points: Vec<[f64; 3]>,
    buckets: HashMap<[i64; 3], Vec<usize>>,
}

impl PointPool {
    fn new(scale: f64) -> Self {
        PointPool { tol: 1e-9 * scale, cell: 1e-6 * scale, points: Vec::new(), buckets: HashMap::new() }
    }

    fn key(&self, p: [f64; 3]) -> [i64; 3] {
        [
            (p[0] / self.cell).floor() as i64,
            (p[1] / self.cell).floor() as i64,
            (p[2] / self.cell).floor() as i64,
        ]
    }

    fn insert(&mut self, p: [f64; 3]) -> usize {
        let k = self.key(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(list) = self.buckets.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) {
                        for &i in list {
                            let q = self.points[i];
                            if (0..3).all(|d| (q[d] - p[d]).abs() <= self.tol) {
                                return i;
                            }
                        }
                    }
                }
            }
        }
        let i = self.points.len();
        self.points.push(p);
        self.buckets.entry(k).or_default().push(i);
        i
    }
}

/// Point on the rim at tangential parameter `t` in [-1, 1] of the east block,
/// mirrored exactly in `t`.
fn rim_point(radius: f64, t: f64) -> [f64; 2] {
    if t.abs() == 1.0 {
        return [radius * FRAC_1_SQRT_2, t * radius * FRAC_1_SQRT_2];
    }
    let a = t.abs() * FRAC_PI_4;
    [radius * a.cos(), t.signum() * radius * a.sin()]
}

/// Five-block O-grid ("butterfly") disc of radius `radius` centred at the
/// origin, mid-plane z = 0. Node sets: `midsurface` (z = 0), `top` and
/// `bottom` (z = +-h/2), `rim` (r = R) and `center`. With `clamp_edge` every dof on the lateral rim face is fixed.
pub fn generate_circular_plate_mesh(
    radius: f64,
    thickness: f64,
    refinement: usize,
    kind: ElementKind,
    clamp_edge: bool,
) -> Result<Mesh> {
    generate_circular_plate_mesh_with(radius, thickness, OgridParams::from_refinement(refinement), kind, clamp_edge)
}

pub fn generate_circular_plate_mesh_with(
    radius: f64,
    thickness: f64,
    params: OgridParams,
    kind: ElementKind,
    clamp_edge: bool,
) -> Result<Mesh> {
    for (name, v) in [("radius", radius), ("thickness", thickness)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidArgument(format!("plate {name} must be positive, got {v}")));
        }
    }
    let OgridParams { square_cells: n, radial_cells: m, thickness_layers: nt, inner_fraction } = params;
    if n < 2 || m < 1 || nt < 1 {
        return Err(Error::InvalidArgument(format!(
            "O-grid needs at least 2 square cells, 1 radial cell and 1 layer, got ({n}, {m}, {nt})"
        )));
    }
    if !(inner_fraction > 0.0 && inner_fraction < FRAC_1_SQRT_2) {
        return Err(Error::InvalidArgument(format!(
            "inner square fraction must lie in (0, 1/sqrt 2), got {inner_fraction}"
        )));
    }
    let s = inner_fraction * radius;
    let (step, offsets) = node_offsets(kind);
    let mut pool = PointPool::new(radius);
    let mut elements = Vec::new();
    let zc = step * nt;

    // block 0: central square; blocks 1..=4: east block rotated by k quarter turns
    for block in 0..5 {
        let (na, nb) = if block == 0 { (n, n) } else { (m, n) };
        let map = |a: usize, b: usize| -> [f64; 2] {
            if block == 0 {
                let u = centered(2.0 * s, a, step * n);
                let v = centered(2.0 * s, b, step * n);
                return [u, v];
            }
            let rho = a as f64 / (step * m) as f64;
            let t = (2 * b as i64 - (step * n) as i64) as f64 / (step * n) as f64;
            let inner = [s, s * t];
            let outer = rim_point(radius, t);
            let mut p = if a == step * m {
                outer
            } else if a == 0 {
                inner
            } else {
                [(1.0 - rho) * inner[0] + rho * outer[0], (1.0 - rho) * inner[1] + rho * outer[1]]
            };
            for _ in 1..block {
                p = [-p[1], p[0]];
            }
            p
        };
        let dims = [step * na + 1, step * nb + 1, zc + 1];
        let mut id = vec![usize::MAX; dims[0] * dims[1] * dims[2]];
        let lin = |i: usize, j: usize, k: usize| (i * dims[1] + j) * dims[2] + k;
        for i in 0..dims[0] {
            for j in 0..dims[1] {
                for k in 0..dims[2] {
                    if is_node(kind, [i, j, k]) {
                        let [x, y] = map(i, j);
                        id[lin(i, j, k)] = pool.insert([x, y, centered(thickness, k, zc)]);
                    }
                }
            }
        }
        for ea in 0..na {
            for eb in 0..nb {
                for ez in 0..nt {
                    let base = [ea * step, eb * step, ez * step];
                    elements.push(
                        offsets
                            .iter()
                            .map(|o| id[lin(base[0] + o[0], base[1] + o[1], base[2] + o[2])])
                            .collect::<Vec<_>>(),
                    );
                }
            }
        }
    }

    let nodes = pool.points;
    let mut sets: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    let rim_tol = 1e-9 * radius;
    for (i, p) in nodes.iter().enumerate() {
        let r = p[0].hypot(p[1]);
        if p[2].abs() <= 1e-12 * thickness {
            sets.entry("midsurface".into()).or_default().push(i);
            if r <= rim_tol {
                sets.entry("center".into()).or_default().push(i);
            }
        }
        if (p[2].abs() - 0.5 * thickness).abs() <= 1e-12 * thickness {
            sets.entry(if p[2] > 0.0 { "top" } else { "bottom" }.into()).or_default().push(i);
        }
        if r >= radius - rim_tol {
            sets.entry("rim".into()).or_default().push(i);
        }
    }
    if !sets.contains_key("midsurface") {
        return Err(Error::InvalidArgument(
            "layout has no nodes on the mid-plane; use an even layer count for HEX8".into(),
        ));
    }
    let mut dirichlet = Vec::new();
    if clamp_edge {
        for &i in &sets["rim"] {
            for d in 0..3 {
                dirichlet.push((i, d));
            }
        }
    }
    let mesh = Mesh { nodes, elements, kind, node_sets: sets, dirichlet };
    mesh.validate()?;
    Ok(mesh)
}
