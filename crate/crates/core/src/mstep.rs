//! Condensed cubic coefficients from nonlinear static solves in which only the
//! transverse displacement of the middle line or surface is prescribed.
//!
//! Prescribing `x_M = lambda phi_p^M` on the masters and leaving every other
//! dof force-free lets the solve find the non-bending response implicitly, so
//! the projected reaction carries the condensed coefficients:
//!
//! ```text
//! Gamma^p_ppp = phi_p^T f(x) / (m_p lambda^3) - w_p^2 / lambda^2
//! Gamma^k_ppp = phi_k^T f(x) / (m_k lambda^3)          (k != p)
//! ```
//!
//! Solves at `+lambda` and `-lambda` are antisymmetrised to remove even terms.

use crate::error::{Error, Result};
use crate::fe::{solve_constrained_static, FeModel, NewtonOptions, NonlinearScale, StaticSolution};
use crate::linalg::{dot, norm};
use crate::modal::ModeSet;
use crate::reduction::GammaMap;

/// Prescribed-displacement dofs.
#[derive(Clone, Debug, PartialEq)]
pub struct MasterSelection {
    /// Free dof indices, ordered by node.
    pub dofs: Vec<usize>,
    /// `(node, direction)` of every master dof.
    pub nodes: Vec<(usize, usize)>,
    pub source_set: String,
    pub direction: usize,
}

impl MasterSelection {
    pub fn len(&self) -> usize {
        self.dofs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dofs.is_empty()
    }

    /// Every free dof (classical STEP as a degenerate M-STEP).
    pub fn all_dofs(model: &FeModel) -> MasterSelection {
        let dofs: Vec<usize> = (0..model.ndof()).collect();
        let nodes = dofs.iter().map(|&d| model.dofs().node_dir(d)).collect();
        MasterSelection { dofs, nodes, source_set: "all".into(), direction: usize::MAX }
    }
}

/// Transverse (`direction`) dofs of the nodes of `set`; constrained dofs are skipped.
pub fn select_masters(model: &FeModel, set: &str, direction: usize) -> Result<MasterSelection> {
    if direction > 2 {
        return Err(Error::InvalidArgument(format!("direction {direction} is not 0, 1 or 2")));
    }
    let mut pairs: Vec<(usize, usize)> = model
        .mesh()
        .node_set(set)?
        .iter()
        .filter_map(|&n| model.dofs().dof(n, direction).map(|d| (d, n)))
        .collect();
    pairs.sort_unstable();
    pairs.dedup();
    if pairs.is_empty() {
        return Err(Error::InvalidArgument(format!("node set '{set}' has no free dof in direction {direction}")));
    }
    Ok(MasterSelection {
        dofs: pairs.iter().map(|p| p.0).collect(),
        nodes: pairs.iter().map(|p| (p.1, direction)).collect(),
        source_set: set.to_string(),
        direction,
    })
}

/// Nonlinear solve with `x_M = shape_M` and zero force on the other dofs.
pub fn mstep_solve(
    model: &FeModel,
    shape: &[f64],
    masters: &MasterSelection,
    opts: &NewtonOptions,
) -> Result<StaticSolution> {
    let prescribed: Vec<(usize, f64)> = masters.dofs.iter().map(|&d| (d, shape[d])).collect();
    solve_constrained_static(model, &prescribed, None, opts)
}

/// Linear solve with the same constraints.
pub fn linear_constrained_solve(model: &FeModel, shape: &[f64], masters: &MasterSelection) -> Result<StaticSolution> {
    let linear = model.with_nonlinear_scale(NonlinearScale::LINEAR);
    mstep_solve(&linear, shape, masters, &NewtonOptions::default())
}

/// `e1^pk = phi_k^T K x_l / (lambda w_p^2 m_p) - delta_pk`, with `K x_l` the
/// reaction of the linear constrained solve.
pub fn error_e1(modes: &ModeSet, p: usize, k: usize, lambda: f64, linear: &StaticSolution) -> f64 {
    let mut f = vec![0.0; linear.internal_force.len()];
    for &(d, r) in &linear.reactions {
        f[d] = r;
    }
    let v = dot(&modes.shapes[k], &f) / (lambda * modes.omega[p].powi(2) * modes.modal_masses[p]);
    if p == k {
        v - 1.0
    } else {
        v
    }
}

/// `e2 = ||x_l - lambda phi_p|| / ||lambda phi_p||`.
pub fn error_e2(modes: &ModeSet, p: usize, lambda: f64, linear: &StaticSolution) -> f64 {
    let target: Vec<f64> = modes.shapes[p].iter().map(|v| lambda * v).collect();
    let diff: Vec<f64> = linear.displacement.iter().zip(&target).map(|(a, b)| a - b).collect();
    norm(&diff) / norm(&target)
}

/// Quality thresholds above which a result is flagged unreliable.
pub const E1_WARN: f64 = 1e-3;
pub const E2_WARN: f64 = 1e-3;

#[derive(Clone, Debug)]
pub struct MstepResult {
    pub mode: usize,
    pub amplitude: f64,
    /// `(k, Gamma^k_ppp)` for every projection mode.
    pub gamma: Vec<(usize, f64)>,
    /// `(k, e1^pk)`.
    pub e1: Vec<(usize, f64)>,
    pub e2: f64,
    pub plus: StaticSolution,
    pub minus: StaticSolution,
    pub unreliable: bool,
}

impl MstepResult {
    pub fn gamma_of(&self, k: usize) -> Option<f64> {
        self.gamma.iter().find(|g| g.0 == k).map(|g| g.1)
    }
}

fn projected(modes: &ModeSet, k: usize, f: &[f64]) -> f64 {
    dot(&modes.shapes[k], f) / modes.modal_masses[k]
}

/// Corrected coefficients `Gamma^k_ppp` of bending mode `p` at modal amplitude `lambda`.
pub fn mstep_gamma(
    model: &FeModel,
    modes: &ModeSet,
    p: usize,
    lambda: f64,
    masters: &MasterSelection,
    projection: &[usize],
    opts: &NewtonOptions,
) -> Result<MstepResult> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument("M-STEP amplitude must be positive".into()));
    }
    let plus_shape: Vec<f64> = modes.shapes[p].iter().map(|v| lambda * v).collect();
    let minus_shape: Vec<f64> = plus_shape.iter().map(|v| -v).collect();
    let plus = mstep_solve(model, &plus_shape, masters, opts)?;
    let minus = mstep_solve(model, &minus_shape, masters, opts)?;
    let odd: Vec<f64> = plus.internal_force.iter().zip(&minus.internal_force).map(|(a, b)| 0.5 * (a - b)).collect();
    let l3 = lambda.powi(3);
    let gamma: Vec<(usize, f64)> = projection
        .iter()
        .map(|&k| {
            let mut g = projected(modes, k, &odd) / l3;
            if k == p {
                g -= modes.omega[p].powi(2) / (lambda * lambda);
            }
            (k, g)
        })
        .collect();
    let linear = linear_constrained_solve(model, &plus_shape, masters)?;
    let mut e1_modes = projection.to_vec();
    if !e1_modes.contains(&p) {
        e1_modes.insert(0, p);
    }
    let e1: Vec<(usize, f64)> = e1_modes.iter().map(|&k| (k, error_e1(modes, p, k, lambda, &linear))).collect();
    let e2 = error_e2(modes, p, lambda, &linear);
    let unreliable = e1.iter().any(|e| e.1.abs() > E1_WARN) || e2 > E2_WARN;
    Ok(MstepResult { mode: p, amplitude: lambda, gamma, e1, e2, plus, minus, unreliable })
}

/// `Gamma^r_iii, Gamma^r_iij, Gamma^r_ijj, Gamma^r_jjj` for `r` in `projection`
/// from eight solves along `+-(w_i l_i phi_i + w_j l_j phi_j)` with
/// `w in {(1,0), (0,1), (1,1), (1,-1)}`.
pub fn mstep_gamma_mixed(
    model: &FeModel,
    modes: &ModeSet,
    (i, j): (usize, usize),
    (li, lj): (f64, f64),
    masters: &MasterSelection,
    projection: &[usize],
    opts: &NewtonOptions,
) -> Result<GammaMap> {
    if i == j {
        return Err(Error::InvalidArgument("mixed coefficients need two distinct modes".into()));
    }
    if !(li > 0.0 && lj > 0.0) {
        return Err(Error::InvalidArgument("M-STEP amplitudes must be positive".into()));
    }
    let ((i, li), (j, lj)) = if i < j { ((i, li), (j, lj)) } else { ((j, lj), (i, li)) };
    // odd cubic part of the projected reaction along direction (wi, wj)
    let odd_cubic = |wi: f64, wj: f64| -> Result<Vec<f64>> {
        let (ci, cj) = (wi * li, wj * lj);
        let shape: Vec<f64> =
            modes.shapes[i].iter().zip(&modes.shapes[j]).map(|(a, b)| ci * a + cj * b).collect();
        let neg: Vec<f64> = shape.iter().map(|v| -v).collect();
        let fp = mstep_solve(model, &shape, masters, opts)?.internal_force;
        let fm = mstep_solve(model, &neg, masters, opts)?.internal_force;
        let odd: Vec<f64> = fp.iter().zip(&fm).map(|(a, b)| 0.5 * (a - b)).collect();
        Ok(projection
            .iter()
            .map(|&k| {
                let nominal = if k == i {
                    ci
                } else if k == j {
                    cj
                } else {
                    0.0
                };
                projected(modes, k, &odd) - modes.omega[k].powi(2) * nominal
            })
            .collect())
    };
    let o10 = odd_cubic(1.0, 0.0)?;
    let o01 = odd_cubic(0.0, 1.0)?;
    let o11 = odd_cubic(1.0, 1.0)?;
    let o1m = odd_cubic(1.0, -1.0)?;
    let mut out = GammaMap::new();
    for (row, &r) in projection.iter().enumerate() {
        let iii = o10[row] / li.powi(3);
        let jjj = o01[row] / lj.powi(3);
        let s = o11[row] - o10[row] - o01[row];
        let d = o1m[row] - o10[row] + o01[row];
        out.insert((r, i, i, i), iii);
        out.insert((r, j, j, j), jjj);
        out.insert((r, i, i, j), 0.5 * (s - d) / (li * li * lj));
        out.insert((r, i, j, j), 0.5 * (s + d) / (li * lj * lj));
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct ValidityPoint {
    /// Largest prescribed displacement divided by the reference length.
    pub ratio: f64,
    pub gamma: Option<f64>,
    /// `|Gamma / Gamma_ref - 1|` (infinite when the solve failed).
    pub error: f64,
}

#[derive(Clone, Debug)]
pub struct ValidityRange {
    pub points: Vec<ValidityPoint>,
    /// Bounds of the longest contiguous run of valid ratios.
    pub lower: f64,
    pub upper: f64,
}

impl ValidityRange {
    pub fn contains(&self, ratio: f64) -> bool {
        ratio >= self.lower && ratio <= self.upper
    }

    /// Width in decades.
    pub fn log_width(&self) -> f64 {
        (self.upper / self.lower).log10()
    }
}

/// Tolerance defining the validity range.
pub const VALIDITY_TOL: f64 = 0.03;

/// `Gamma^p_ppp` over amplitudes `ratio * length / max|phi_p|`, and the
/// longest contiguous run of ratios with relative error `<= 3 %` against `reference`.
#[allow(clippy::too_many_arguments)]
pub fn amplitude_validity_sweep(
    model: &FeModel,
    modes: &ModeSet,
    p: usize,
    ratios: &[f64],
    length: f64,
    masters: &MasterSelection,
    reference: f64,
    opts: &NewtonOptions,
) -> Result<ValidityRange> {
    validity_range(validity_points(model, modes, p, ratios, length, masters, reference, opts))
}

/// Relative error of the M-STEP `Gamma^p_ppp` against `reference` at each
/// ratio, sorted by ratio.
#[allow(clippy::too_many_arguments)]
pub fn validity_points(
    model: &FeModel,
    modes: &ModeSet,
    p: usize,
    ratios: &[f64],
    length: f64,
    masters: &MasterSelection,
    reference: f64,
    opts: &NewtonOptions,
) -> Vec<ValidityPoint> {
    let peak = modes.shapes[p].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut sorted = ratios.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted
        .iter()
        .map(|&ratio| {
            let lambda = ratio * length / peak;
            let gamma = mstep_gamma(model, modes, p, lambda, masters, &[p], opts).ok().and_then(|r| r.gamma_of(p));
            let error = gamma.map_or(f64::INFINITY, |g| (g / reference - 1.0).abs());
            ValidityPoint { ratio, gamma, error }
        })
        .collect()
}

/// Longest contiguous run of `points` (sorted by ratio) within [`VALIDITY_TOL`].
pub fn validity_range(points: Vec<ValidityPoint>) -> Result<ValidityRange> {
    let mut best: Option<(usize, usize)> = None;
    let mut start = None;
    for (idx, pt) in points.iter().enumerate() {
        if pt.error <= VALIDITY_TOL {
            let s = *start.get_or_insert(idx);
            if best.map_or(true, |(a, b)| idx - s > b - a) {
                best = Some((s, idx));
            }
        } else {
            start = None;
        }
    }
    match best {
        Some((a, b)) => Ok(ValidityRange { lower: points[a].ratio, upper: points[b].ratio, points }),
        None => {
            let listing: Vec<String> = points.iter().map(|p| format!("{:.3e}: {:.3e}", p.ratio, p.error)).collect();
            Err(Error::EmptyValidityRange(listing.join(", ")))
        }
    }
}
