//! Generalised eigenproblem, mode normalisation and bending classification.

use std::f64::consts::PI;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fe::FeModel;
use crate::linalg::dense::{generalized_eigh, symmetric_eigh};
use crate::linalg::solver::DENSE_LIMIT;
use crate::linalg::{dot, shift_invert_lanczos, CsrMatrix, LanczosOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeLabel {
    Bending,
    NonBending,
    Unclassified,
}

/// Mass-normalised eigenpairs sorted by frequency. Mode indices are 0-based.
#[derive(Clone, Debug)]
pub struct ModeSet {
    /// Circular frequencies (rad/s), ascending.
    pub omega: Vec<f64>,
    pub shapes: Vec<Vec<f64>>,
    pub modal_masses: Vec<f64>,
    pub labels: Vec<ModeLabel>,
    /// Transverse midline/midsurface participation `r_k` (NaN until classified).
    pub ratios: Vec<f64>,
    pub transverse: [f64; 3],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModeCount {
    All,
    Lowest(usize),
}

impl ModeSet {
    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn frequency_hz(&self, k: usize) -> f64 {
        self.omega[k] / (2.0 * PI)
    }

    pub fn bending_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&k| self.labels[k] == ModeLabel::Bending).collect()
    }

    /// Index of the `i`-th (0-based) bending mode.
    pub fn nth_bending(&self, i: usize) -> Result<usize> {
        self.bending_indices()
            .get(i)
            .copied()
            .ok_or_else(|| Error::InvalidArgument(format!("fewer than {} bending modes computed", i + 1)))
    }

    /// Modal coordinates `phi_k^T M x / m_k` for every mode, given `M x`.
    pub fn project_mass_weighted(&self, mx: &[f64]) -> Vec<f64> {
        self.shapes.iter().zip(&self.modal_masses).map(|(p, m)| dot(p, mx) / m).collect()
    }

    /// Keep only the listed modes (in the given order).
    pub fn subset(&self, idx: &[usize]) -> ModeSet {
        ModeSet {
            omega: idx.iter().map(|&k| self.omega[k]).collect(),
            shapes: idx.iter().map(|&k| self.shapes[k].clone()).collect(),
            modal_masses: idx.iter().map(|&k| self.modal_masses[k]).collect(),
            labels: idx.iter().map(|&k| self.labels[k]).collect(),
            ratios: idx.iter().map(|&k| self.ratios[k]).collect(),
            transverse: self.transverse,
        }
    }
}

/// Make the first entry of largest magnitude positive.
fn fix_sign(v: &mut [f64]) {
    let max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if let Some(first) = v.iter().position(|x| x.abs() >= (1.0 - 1e-9) * max) {
        if v[first] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

fn normalize(v: &mut [f64], m: &CsrMatrix) {
    let mm = m.bilinear(v, v).sqrt();
    v.iter_mut().for_each(|x| *x /= mm);
}

/// Lowest (or all) eigenpairs of `K v = w^2 M v`, mass-normalised, with the
/// sign convention "largest-magnitude entry positive". Dense Cholesky-reduced
/// LAPACK solve up to 3000 dofs, shift-invert Lanczos above.
pub fn solve_modes(k: &CsrMatrix, m: &CsrMatrix, count: ModeCount) -> Result<ModeSet> {
    let n = k.dim();
    let wanted = match count {
        ModeCount::All => n,
        ModeCount::Lowest(c) => c,
    };
    if wanted == 0 || wanted > n {
        return Err(Error::InvalidArgument(format!("cannot compute {wanted} modes of a {n}-dof system")));
    }
    let (vals, mut shapes): (Vec<f64>, Vec<Vec<f64>>) = if n <= DENSE_LIMIT {
        let (w, v) = generalized_eigh(&k.to_dense(), &m.to_dense())?;
        (w[..wanted].to_vec(), (0..wanted).map(|j| v.column(j).to_vec()).collect())
    } else if count == ModeCount::All {
        return Err(Error::InvalidArgument(format!(
            "full spectrum requested for {n} dofs; dense solves are limited to {DENSE_LIMIT}"
        )));
    } else {
        shift_invert_lanczos(k, m, wanted, &LanczosOptions::default())?
    };
    for v in shapes.iter_mut() {
        normalize(v, m);
        fix_sign(v);
    }
    let omega = vals.iter().map(|&l| l.max(0.0).sqrt()).collect();
    Ok(ModeSet {
        omega,
        shapes,
        modal_masses: vec![1.0; wanted],
        labels: vec![ModeLabel::Unclassified; wanted],
        ratios: vec![f64::NAN; wanted],
        transverse: [0.0, 0.0, 0.0],
    })
}

/// Per-dof weights used to fix the orientation of repeated eigenvalues.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AlignmentWeight {
    /// Unit weight on the chosen direction of every node of the set.
    Uniform,
    /// Weight `X_axis^2` on the chosen direction of every node of the set.
    SquaredCoordinate(usize),
}

pub fn alignment_weights(model: &FeModel, set: &str, direction: usize, weight: AlignmentWeight) -> Result<Vec<f64>> {
    let mesh = model.mesh();
    let mut w = vec![0.0; model.ndof()];
    for &node in mesh.node_set(set)? {
        if let Some(d) = model.dofs().dof(node, direction) {
            w[d] = match weight {
                AlignmentWeight::Uniform => 1.0,
                AlignmentWeight::SquaredCoordinate(axis) => mesh.nodes[node][axis].powi(2),
            };
        }
    }
    Ok(w)
}

/// Rotate each cluster of repeated eigenvalues (relative gap on `w^2` below
/// `rel_tol`) onto the eigenvectors of `Phi_c^T W Phi_c`, largest first.
/// Returns the number of clusters rotated.
pub fn align_degenerate(modes: &mut ModeSet, weights: &[f64], rel_tol: f64) -> usize {
    let n = modes.len();
    let mut rotated = 0;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n {
            let (a, b) = (modes.omega[end - 1].powi(2), modes.omega[end].powi(2));
            if b - a <= rel_tol * b.max(f64::MIN_POSITIVE) {
                end += 1;
            } else {
                break;
            }
        }
        let c = end - start;
        if c > 1 {
            let mut t = Array2::zeros((c, c));
            for i in 0..c {
                for j in 0..=i {
                    let v: f64 = modes.shapes[start + i]
                        .iter()
                        .zip(&modes.shapes[start + j])
                        .zip(weights)
                        .map(|((a, b), w)| a * b * w)
                        .sum();
                    t[[i, j]] = v;
                    t[[j, i]] = v;
                }
            }
            if let Ok((_, y)) = symmetric_eigh(&t) {
                let old: Vec<Vec<f64>> = modes.shapes[start..end].to_vec();
                for (slot, col) in (0..c).rev().enumerate() {
                    let mut v = vec![0.0; old[0].len()];
                    for i in 0..c {
                        let coef = y[[i, col]];
                        for (vv, o) in v.iter_mut().zip(&old[i]) {
                            *vv += coef * o;
                        }
                    }
                    fix_sign(&mut v);
                    modes.shapes[start + slot] = v;
                }
                rotated += 1;
            }
        }
        start = end;
    }
    rotated
}

/// Label each mode bending when the transverse share `r_k` of its motion on
/// the node set `midset` is at least 0.5.
pub fn classify_modes(modes: &mut ModeSet, model: &FeModel, midset: &str, n: [f64; 3]) -> Result<()> {
    let nodes = model.mesh().node_set(midset)?;
    let nn = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    if !(nn > 0.0) {
        return Err(Error::InvalidArgument("transverse direction must be non-zero".into()));
    }
    let dir = [n[0] / nn, n[1] / nn, n[2] / nn];
    let dofs = model.dofs();
    for k in 0..modes.len() {
        let phi = &modes.shapes[k];
        let total: f64 = phi.iter().map(|v| v * v).sum();
        let mut transverse = 0.0;
        let mut all = 0.0;
        for &node in nodes {
            let mut u = [0.0; 3];
            for (d, ud) in u.iter_mut().enumerate() {
                if let Some(i) = dofs.dof(node, d) {
                    *ud = phi[i];
                }
            }
            let t = u[0] * dir[0] + u[1] * dir[1] + u[2] * dir[2];
            transverse += t * t;
            all += u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
        }
        let r = if all <= 1e-20 * total { 0.0 } else { (transverse / all).sqrt() };
        modes.ratios[k] = r;
        modes.labels[k] = if r >= 0.5 { ModeLabel::Bending } else { ModeLabel::NonBending };
    }
    modes.transverse = dir;
    Ok(())
}

/// Largest `|phi^T M phi_j - delta|` and largest relative Rayleigh defect over the set.
pub fn orthonormality_defects(modes: &ModeSet, k: &CsrMatrix, m: &CsrMatrix) -> (f64, f64) {
    let mphi: Vec<Vec<f64>> = modes.shapes.iter().map(|v| m.matvec(v)).collect();
    let mut orth = 0.0f64;
    for i in 0..modes.len() {
        for j in 0..modes.len() {
            let expect = if i == j { 1.0 } else { 0.0 };
            orth = orth.max((dot(&modes.shapes[i], &mphi[j]) - expect).abs());
        }
    }
    let mut rayleigh = 0.0f64;
    for (i, v) in modes.shapes.iter().enumerate() {
        let w2 = modes.omega[i].powi(2);
        if w2 > 0.0 {
            rayleigh = rayleigh.max((k.bilinear(v, v) - w2).abs() / w2);
        }
    }
    (orth, rayleigh)
}
