//! Total-Lagrangian Saint Venant-Kirchhoff assembly.
//!
//! With `H` the displacement gradient, `e = sym(H)` and `E_nl = H^T H / 2`, the
//! strain energy density is
//!
//! ```text
//! W = e:C:e / 2 + s2 e:C:E_nl + s3 E_nl:C:E_nl / 2
//! ```
//!
//! which reduces to `E:C:E / 2` for `s2 = s3 = 1`. The first Piola stress is
//!
//! ```text
//! P = C:e + s2 (C:E_nl + H C:e) + s3 H C:E_nl
//! ```
//!
//! so the quadratic and cubic parts of the internal force are evaluated
//! directly rather than as `f(x) - Kx`.

use rayon::prelude::*;

use super::element::ElementKind;
use super::material::Material;
use super::mesh::{DofMap, Mesh};
use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;

type Mat3 = [[f64; 3]; 3];

/// Multipliers of the quadratic and cubic internal-force terms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NonlinearScale {
    pub quadratic: f64,
    pub cubic: f64,
}

impl NonlinearScale {
    pub const FULL: NonlinearScale = NonlinearScale { quadratic: 1.0, cubic: 1.0 };
    pub const LINEAR: NonlinearScale = NonlinearScale { quadratic: 0.0, cubic: 0.0 };
}

impl Default for NonlinearScale {
    fn default() -> Self {
        Self::FULL
    }
}

const NONE: usize = usize::MAX;

/// Mesh, material and precomputed quadrature data. Immutable after construction.
#[derive(Clone, Debug)]
pub struct FeModel {
    mesh: Mesh,
    material: Material,
    dofs: DofMap,
    scale: NonlinearScale,
    /// Free dof index per element dof (`usize::MAX` when constrained).
    elem_dofs: Vec<Vec<usize>>,
    /// Shape function values per quadrature point (same for every element).
    shapes: Vec<Vec<f64>>,
    /// Physical gradients, `nqp * npe` entries per element.
    grads: Vec<Vec<[f64; 3]>>,
    /// Quadrature weight times Jacobian determinant, `nqp` per element.
    weights: Vec<Vec<f64>>,
    pattern: CsrMatrix,
}

fn det3(j: &Mat3) -> f64 {
    j[0][0] * (j[1][1] * j[2][2] - j[1][2] * j[2][1]) - j[0][1] * (j[1][0] * j[2][2] - j[1][2] * j[2][0])
        + j[0][2] * (j[1][0] * j[2][1] - j[1][1] * j[2][0])
}

fn inv3(j: &Mat3, det: f64) -> Mat3 {
    let mut inv = [[0.0; 3]; 3];
    inv[0][0] = (j[1][1] * j[2][2] - j[1][2] * j[2][1]) / det;
    inv[0][1] = (j[0][2] * j[2][1] - j[0][1] * j[2][2]) / det;
    inv[0][2] = (j[0][1] * j[1][2] - j[0][2] * j[1][1]) / det;
    inv[1][0] = (j[1][2] * j[2][0] - j[1][0] * j[2][2]) / det;
    inv[1][1] = (j[0][0] * j[2][2] - j[0][2] * j[2][0]) / det;
    inv[1][2] = (j[0][2] * j[1][0] - j[0][0] * j[1][2]) / det;
    inv[2][0] = (j[1][0] * j[2][1] - j[1][1] * j[2][0]) / det;
    inv[2][1] = (j[0][1] * j[2][0] - j[0][0] * j[2][1]) / det;
    inv[2][2] = (j[0][0] * j[1][1] - j[0][1] * j[1][0]) / det;
    inv
}

/// `C:X` for symmetric `X`.
#[inline]
fn hooke(lambda: f64, mu: f64, x: &Mat3) -> Mat3 {
    let tr = x[0][0] + x[1][1] + x[2][2];
    let mut s = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            s[i][j] = 2.0 * mu * x[i][j];
        }
        s[i][i] += lambda * tr;
    }
    s
}

#[inline]
fn matmul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    c
}

/// Linear strain and nonlinear Green-Lagrange part of a displacement gradient.
#[inline]
fn strain_parts(h: &Mat3) -> (Mat3, Mat3) {
    let mut e = [[0.0; 3]; 3];
    let mut enl = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            e[i][j] = 0.5 * (h[i][j] + h[j][i]);
            enl[i][j] = 0.5 * (h[0][i] * h[0][j] + h[1][i] * h[1][j] + h[2][i] * h[2][j]);
        }
    }
    (e, enl)
}

/// Which part of the internal force to evaluate.
#[derive(Clone, Copy, PartialEq, Eq)]
enum ForcePart {
    Full,
    Nonlinear,
}

impl FeModel {
    pub fn new(mesh: Mesh, material: Material) -> Result<Self> {
        Self::with_scale(mesh, material, NonlinearScale::FULL)
    }

    pub fn with_scale(mesh: Mesh, material: Material, scale: NonlinearScale) -> Result<Self> {
        mesh.validate()?;
        material.validate()?;
        let dofs = DofMap::new(&mesh);
        let kind = mesh.kind;
        let npe = kind.nodes_per_element();
        let rule = kind.gauss_rule();
        let mut shapes = Vec::with_capacity(rule.len());
        let mut ref_grads = Vec::with_capacity(rule.len());
        for (xi, _) in &rule {
            let (n, g) = kind.shape(*xi);
            shapes.push(n);
            ref_grads.push(g);
        }
        let geometry: Vec<Result<(Vec<[f64; 3]>, Vec<f64>)>> = mesh
            .elements
            .par_iter()
            .enumerate()
            .map(|(e, conn)| {
                let mut g_all = Vec::with_capacity(rule.len() * npe);
                let mut w_all = Vec::with_capacity(rule.len());
                for (q, (_, w)) in rule.iter().enumerate() {
                    let dn = &ref_grads[q];
                    // J[i][r] = dX_i / dxi_r
                    let mut jac = [[0.0; 3]; 3];
                    for (a, &node) in conn.iter().enumerate() {
                        let x = mesh.nodes[node];
                        for i in 0..3 {
                            for r in 0..3 {
                                jac[i][r] += x[i] * dn[a][r];
                            }
                        }
                    }
                    let det = det3(&jac);
                    if !(det > 0.0) {
                        return Err(Error::DegenerateElement { element: e, point: q, det });
                    }
                    let inv = inv3(&jac, det);
                    for g in dn.iter() {
                        // dN/dX_J = sum_r dN/dxi_r dxi_r/dX_J
                        let mut out = [0.0; 3];
                        for (jj, o) in out.iter_mut().enumerate() {
                            *o = g[0] * inv[0][jj] + g[1] * inv[1][jj] + g[2] * inv[2][jj];
                        }
                        g_all.push(out);
                    }
                    w_all.push(w * det);
                }
                Ok((g_all, w_all))
            })
            .collect();
        let mut grads = Vec::with_capacity(geometry.len());
        let mut weights = Vec::with_capacity(geometry.len());
        for g in geometry {
            let (g, w) = g?;
            grads.push(g);
            weights.push(w);
        }
        let elem_dofs: Vec<Vec<usize>> = mesh
            .elements
            .iter()
            .map(|conn| {
                conn.iter()
                    .flat_map(|&n| (0..3).map(move |d| (n, d)))
                    .map(|(n, d)| dofs.dof(n, d).unwrap_or(NONE))
                    .collect()
            })
            .collect();
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); dofs.len()];
        for ed in &elem_dofs {
            for &r in ed.iter().filter(|&&r| r != NONE) {
                rows[r].extend(ed.iter().copied().filter(|&c| c != NONE));
            }
        }
        let pattern = CsrMatrix::from_row_pattern(dofs.len(), rows);
        Ok(FeModel { mesh, material, dofs, scale, elem_dofs, shapes, grads, weights, pattern })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn material(&self) -> &Material {
        &self.material
    }

    pub fn dofs(&self) -> &DofMap {
        &self.dofs
    }

    pub fn scale(&self) -> NonlinearScale {
        self.scale
    }

    /// Number of free dofs.
    pub fn ndof(&self) -> usize {
        self.dofs.len()
    }

    pub fn kind(&self) -> ElementKind {
        self.mesh.kind
    }

    /// Copy of the model with different nonlinear multipliers.
    pub fn with_nonlinear_scale(&self, scale: NonlinearScale) -> FeModel {
        FeModel { scale, ..self.clone() }
    }

    /// Copy of the model with a different material (geometry data reused).
    pub fn with_material(&self, material: Material) -> Result<FeModel> {
        material.validate()?;
        Ok(FeModel { material, ..self.clone() })
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.ndof() {
            return Err(Error::DimensionMismatch { expected: self.ndof(), got: x.len() });
        }
        Ok(())
    }

    fn gather(&self, e: usize, x: &[f64]) -> Vec<[f64; 3]> {
        self.elem_dofs[e]
            .chunks(3)
            .map(|c| {
                let mut u = [0.0; 3];
                for d in 0..3 {
                    if c[d] != NONE {
                        u[d] = x[c[d]];
                    }
                }
                u
            })
            .collect()
    }

    fn displacement_gradient(g: &[[f64; 3]], u: &[[f64; 3]]) -> Mat3 {
        let mut h = [[0.0; 3]; 3];
        for (ga, ua) in g.iter().zip(u) {
            for i in 0..3 {
                for j in 0..3 {
                    h[i][j] += ua[i] * ga[j];
                }
            }
        }
        h
    }

    fn element_force(&self, e: usize, u: &[[f64; 3]], part: ForcePart) -> Vec<f64> {
        let npe = u.len();
        let (lambda, mu) = self.material.lame();
        let NonlinearScale { quadratic: s2, cubic: s3 } = self.scale;
        let mut fe = vec![0.0; 3 * npe];
        for (q, &w) in self.weights[e].iter().enumerate() {
            let g = &self.grads[e][q * npe..(q + 1) * npe];
            let h = Self::displacement_gradient(g, u);
            let (eps, enl) = strain_parts(&h);
            let s_lin = hooke(lambda, mu, &eps);
            let s_nl = hooke(lambda, mu, &enl);
            let h_lin = matmul(&h, &s_lin);
            let h_nl = matmul(&h, &s_nl);
            let mut p = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    let nl = s2 * (s_nl[i][j] + h_lin[i][j]) + s3 * h_nl[i][j];
                    p[i][j] = match part {
                        ForcePart::Full => s_lin[i][j] + nl,
                        ForcePart::Nonlinear => nl,
                    };
                }
            }
            for (a, ga) in g.iter().enumerate() {
                for i in 0..3 {
                    fe[3 * a + i] += w * (p[i][0] * ga[0] + p[i][1] * ga[1] + p[i][2] * ga[2]);
                }
            }
        }
        fe
    }

    fn element_tangent(&self, e: usize, u: &[[f64; 3]]) -> Vec<f64> {
        let npe = u.len();
        let nd = 3 * npe;
        let (lambda, mu) = self.material.lame();
        let NonlinearScale { quadratic: s2, cubic: s3 } = self.scale;
        let nonlinear = s2 != 0.0 || s3 != 0.0;
        let mut ke = vec![0.0; nd * nd];
        for (q, &w) in self.weights[e].iter().enumerate() {
            let g = &self.grads[e][q * npe..(q + 1) * npe];
            let h = Self::displacement_gradient(g, u);
            let (eps, enl) = strain_parts(&h);
            let s_lin = hooke(lambda, mu, &eps);
            let s_nl = hooke(lambda, mu, &enl);
            for (b, gb) in g.iter().enumerate() {
                // gb . S, used by the delta-H S terms
                let mut gs_lin = [0.0; 3];
                let mut gs_nl = [0.0; 3];
                for j in 0..3 {
                    gs_lin[j] = gb[0] * s_lin[0][j] + gb[1] * s_lin[1][j] + gb[2] * s_lin[2][j];
                    gs_nl[j] = gb[0] * s_nl[0][j] + gb[1] * s_nl[1][j] + gb[2] * s_nl[2][j];
                }
                for k in 0..3 {
                    // delta H = e_k (x) gb
                    let mut deps = [[0.0; 3]; 3];
                    for j in 0..3 {
                        deps[k][j] += 0.5 * gb[j];
                        deps[j][k] += 0.5 * gb[j];
                    }
                    let c_deps = hooke(lambda, mu, &deps);
                    let mut dp = c_deps;
                    if nonlinear {
                        let mut denl = [[0.0; 3]; 3];
                        for i in 0..3 {
                            for j in 0..3 {
                                denl[i][j] = 0.5 * (h[k][i] * gb[j] + h[k][j] * gb[i]);
                            }
                        }
                        let c_denl = hooke(lambda, mu, &denl);
                        let h_c_deps = matmul(&h, &c_deps);
                        let h_c_denl = matmul(&h, &c_denl);
                        for i in 0..3 {
                            for j in 0..3 {
                                dp[i][j] += s2 * (c_denl[i][j] + h_c_deps[i][j]) + s3 * h_c_denl[i][j];
                            }
                        }
                        for j in 0..3 {
                            dp[k][j] += s2 * gs_lin[j] + s3 * gs_nl[j];
                        }
                    }
                    let col = 3 * b + k;
                    for (a, ga) in g.iter().enumerate() {
                        for i in 0..3 {
                            let v = dp[i][0] * ga[0] + dp[i][1] * ga[1] + dp[i][2] * ga[2];
                            ke[(3 * a + i) * nd + col] += w * v;
                        }
                    }
                }
            }
        }
        ke
    }

    fn element_mass(&self, e: usize) -> Vec<f64> {
        let npe = self.mesh.kind.nodes_per_element();
        let nd = 3 * npe;
        let rho = self.material.density;
        let mut me = vec![0.0; nd * nd];
        for (q, &w) in self.weights[e].iter().enumerate() {
            let n = &self.shapes[q];
            for a in 0..npe {
                for b in 0..npe {
                    let v = w * rho * n[a] * n[b];
                    for d in 0..3 {
                        me[(3 * a + d) * nd + 3 * b + d] += v;
                    }
                }
            }
        }
        me
    }

    fn assemble_vector(&self, parts: Vec<Vec<f64>>) -> Vec<f64> {
        let mut f = vec![0.0; self.ndof()];
        for (e, fe) in parts.iter().enumerate() {
            for (&d, v) in self.elem_dofs[e].iter().zip(fe) {
                if d != NONE {
                    f[d] += v;
                }
            }
        }
        f
    }

    fn assemble_matrix(&self, parts: Vec<Vec<f64>>) -> CsrMatrix {
        let mut m = self.pattern.clone();
        for (e, ke) in parts.iter().enumerate() {
            m.add_element_matrix(&self.elem_dofs[e], ke);
        }
        m
    }

    fn force(&self, x: &[f64], part: ForcePart) -> Result<Vec<f64>> {
        self.check_len(x)?;
        let parts: Vec<Vec<f64>> = (0..self.mesh.elements.len())
            .into_par_iter()
            .map(|e| self.element_force(e, &self.gather(e, x), part))
            .collect();
        Ok(self.assemble_vector(parts))
    }

    /// Internal force `f(x)`.
    pub fn internal_force(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.force(x, ForcePart::Full)
    }

    /// Quadratic plus cubic part `f_nl(x) = f(x) - Kx`, computed without cancellation.
    pub fn nonlinear_force(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.force(x, ForcePart::Nonlinear)
    }

    /// Tangent stiffness `df/dx` at `x`.
    pub fn tangent_stiffness(&self, x: &[f64]) -> Result<CsrMatrix> {
        self.check_len(x)?;
        let parts: Vec<Vec<f64>> = (0..self.mesh.elements.len())
            .into_par_iter()
            .map(|e| self.element_tangent(e, &self.gather(e, x)))
            .collect();
        Ok(self.assemble_matrix(parts))
    }

    /// Linear stiffness `K`.
    pub fn linear_stiffness(&self) -> CsrMatrix {
        self.tangent_stiffness(&vec![0.0; self.ndof()]).expect("length matches")
    }

    /// Consistent mass matrix.
    pub fn mass_matrix(&self) -> CsrMatrix {
        let parts: Vec<Vec<f64>> =
            (0..self.mesh.elements.len()).into_par_iter().map(|e| self.element_mass(e)).collect();
        self.assemble_matrix(parts)
    }

    /// Sum of element volumes.
    pub fn volume(&self) -> f64 {
        self.weights.iter().flatten().sum()
    }

    /// Physical coordinates of the quadrature points of element `e`.
    pub fn quadrature_points(&self, e: usize) -> Vec<[f64; 3]> {
        self.shapes
            .iter()
            .map(|n| {
                let mut p = [0.0; 3];
                for (a, &node) in self.mesh.elements[e].iter().enumerate() {
                    for d in 0..3 {
                        p[d] += n[a] * self.mesh.nodes[node][d];
                    }
                }
                p
            })
            .collect()
    }

    /// Green-Lagrange strain at the quadrature points of element `e` for the
    /// nodal displacement field `u` (one entry per mesh node, constraints ignored).
    pub fn green_lagrange_at_quadrature_points(&self, e: usize, u: &[[f64; 3]]) -> Vec<Mat3> {
        let npe = self.mesh.kind.nodes_per_element();
        let ue: Vec<[f64; 3]> = self.mesh.elements[e].iter().map(|&n| u[n]).collect();
        (0..self.weights[e].len())
            .map(|q| {
                let g = &self.grads[e][q * npe..(q + 1) * npe];
                let h = Self::displacement_gradient(g, &ue);
                let (eps, enl) = strain_parts(&h);
                let mut out = [[0.0; 3]; 3];
                for i in 0..3 {
                    for j in 0..3 {
                        out[i][j] = eps[i][j] + enl[i][j];
                    }
                }
                out
            })
            .collect()
    }

    /// Strain energy of the displacement `x`.
    pub fn strain_energy(&self, x: &[f64]) -> Result<f64> {
        self.check_len(x)?;
        let (lambda, mu) = self.material.lame();
        let NonlinearScale { quadratic: s2, cubic: s3 } = self.scale;
        let npe = self.mesh.kind.nodes_per_element();
        let parts: Vec<f64> = (0..self.mesh.elements.len())
            .into_par_iter()
            .map(|e| {
                let u = self.gather(e, x);
                let mut acc = 0.0;
                for (q, &w) in self.weights[e].iter().enumerate() {
                    let g = &self.grads[e][q * npe..(q + 1) * npe];
                    let h = Self::displacement_gradient(g, &u);
                    let (eps, enl) = strain_parts(&h);
                    let s_lin = hooke(lambda, mu, &eps);
                    let s_nl = hooke(lambda, mu, &enl);
                    let mut dens = 0.0;
                    for i in 0..3 {
                        for j in 0..3 {
                            dens += 0.5 * eps[i][j] * s_lin[i][j]
                                + s2 * eps[i][j] * s_nl[i][j]
                                + 0.5 * s3 * enl[i][j] * s_nl[i][j];
                        }
                    }
                    acc += w * dens;
                }
                acc
            })
            .collect();
        Ok(parts.iter().sum())
    }
}
