use super::model::FeModel;
use crate::error::{Error, Result};
use crate::linalg::{norm, SymmetricSolver};

#[derive(Clone, Copy, Debug)]
pub struct NewtonOptions {
    /// Residual on free dofs relative to the norm of the internal force.
    pub rel_tol: f64,
    /// Multiplier of `max diag(K) * max |prescribed|` giving an absolute residual floor.
    pub abs_floor_factor: f64,
    pub max_iters: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { rel_tol: 1e-10, abs_floor_factor: 1e-14, max_iters: 30 }
    }
}

#[derive(Clone, Debug)]
pub struct StaticSolution {
    pub displacement: Vec<f64>,
    pub internal_force: Vec<f64>,
    /// `(dof, force)` on every prescribed dof.
    pub reactions: Vec<(usize, f64)>,
    pub newton_iters: usize,
    pub residual_norm: f64,
}

/// Load increments tried in turn when Newton diverges.
const INCREMENTS: [usize; 4] = [1, 4, 16, 64];

/// Solve `f_S(x) = f_ext,S` on the unprescribed dofs `S` with `x_P` fixed.
///
/// `prescribed` holds `(free dof, value)` pairs; `external_force` (full length,
/// only unprescribed entries used) defaults to zero. Each increment starts from
/// the tangent predictor at the previous state; if Newton diverges the
/// prescribed values and loads are applied in more increments.
pub fn solve_constrained_static(
    model: &FeModel,
    prescribed: &[(usize, f64)],
    external_force: Option<&[f64]>,
    opts: &NewtonOptions,
) -> Result<StaticSolution> {
    let n = model.ndof();
    let mut is_master = vec![false; n];
    for &(d, _) in prescribed {
        if d >= n {
            return Err(Error::InvalidArgument(format!("prescribed dof {d} out of range ({n} free dofs)")));
        }
        if is_master[d] {
            return Err(Error::InvalidArgument(format!("dof {d} prescribed twice")));
        }
        is_master[d] = true;
    }
    if let Some(f) = external_force {
        if f.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: f.len() });
        }
    }
    let slaves: Vec<usize> = (0..n).filter(|&i| !is_master[i]).collect();
    let mut last = None;
    for steps in INCREMENTS {
        match incremental_solve(model, prescribed, external_force, opts, &slaves, steps) {
            Ok(s) => return Ok(s),
            Err(e @ Error::NewtonDivergence { .. }) | Err(e @ Error::Singular(_)) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

fn incremental_solve(
    model: &FeModel,
    prescribed: &[(usize, f64)],
    external_force: Option<&[f64]>,
    opts: &NewtonOptions,
    slaves: &[usize],
    steps: usize,
) -> Result<StaticSolution> {
    let n = model.ndof();
    let x_scale = prescribed.iter().fold(0.0f64, |m, p| m.max(p.1.abs()));
    let mut x = vec![0.0; n];
    let mut total_iters = 0;
    let mut kt = model.tangent_stiffness(&x)?;
    let kmax = kt.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let abs_floor = opts.abs_floor_factor * kmax * x_scale.max(f64::MIN_POSITIVE);
    for step in 1..=steps {
        let t = step as f64 / steps as f64;
        let ext: Option<Vec<f64>> = external_force.map(|e| e.iter().map(|v| t * v).collect());
        let residual = |f: &[f64]| -> Vec<f64> {
            slaves.iter().map(|&i| f[i] - ext.as_ref().map_or(0.0, |e| e[i])).collect()
        };
        // tangent predictor: K_SS dx_S = -(r_S(x) + K_SM dx_M)
        let mut dm = vec![0.0; n];
        for &(d, v) in prescribed {
            dm[d] = t * v - x[d];
        }
        if !slaves.is_empty() {
            let f0 = model.internal_force(&x)?;
            let kdm = kt.matvec(&dm);
            let r0 = residual(&f0);
            let rhs: Vec<f64> = slaves.iter().zip(&r0).map(|(&i, r)| r + kdm[i]).collect();
            let dx = SymmetricSolver::new(&kt.principal_submatrix(slaves))?.solve(&rhs)?;
            for (&i, d) in slaves.iter().zip(&dx) {
                x[i] -= d;
            }
        }
        for (xi, d) in x.iter_mut().zip(&dm) {
            *xi += d;
        }
        let mut f = model.internal_force(&x)?;
        if slaves.is_empty() {
            if step == steps {
                let reactions = prescribed.iter().map(|&(d, _)| (d, f[d])).collect();
                return Ok(StaticSolution { displacement: x, internal_force: f, reactions, newton_iters: 0, residual_norm: 0.0 });
            }
            continue;
        }
        let mut iters = 0;
        loop {
            let r = residual(&f);
            let rn = norm(&r);
            let scale = norm(&f).max(ext.as_deref().map_or(0.0, norm));
            if rn <= opts.rel_tol * scale || rn <= abs_floor {
                break;
            }
            if !rn.is_finite() || iters >= opts.max_iters {
                return Err(Error::NewtonDivergence { iters: total_iters + iters, residual: rn });
            }
            kt = model.tangent_stiffness(&x)?;
            let dx = SymmetricSolver::new(&kt.principal_submatrix(slaves))?.solve(&r)?;
            for (&i, d) in slaves.iter().zip(&dx) {
                x[i] -= d;
            }
            iters += 1;
            f = model.internal_force(&x)?;
        }
        total_iters += iters;
        if step == steps {
            let rn = norm(&residual(&f));
            let reactions = prescribed.iter().map(|&(d, _)| (d, f[d])).collect();
            return Ok(StaticSolution { displacement: x, internal_force: f, reactions, newton_iters: total_iters, residual_norm: rn });
        }
        kt = model.tangent_stiffness(&x)?;
    }
    unreachable!("the last increment returns")
}
