//! Harmonic balance for polynomial oscillators
//!
//! ```text
//! q_r'' + 2 z_r w_r q_r' + w_r^2 q_r + sum c q_i q_j + sum c q_i q_j q_k
//!       + sum c q_i q_j' q_k' = F_r cos(W t)
//! ```
//!
//! The periodic response is `q_r(tau) = c0 + sum_h a_h cos(h tau) + b_h sin(h tau)`
//! with `tau = W t`. Each dof owns a block `[c0, a1, b1, ..., aH, bH]` of the
//! state vector. Nonlinear terms go through alternating frequency/time with
//! `2^ceil(log2(8H))` samples per period.

mod continuation;
mod timeint;

pub use continuation::{
    backbone, compare_branches, continue_frf, upper_branch_stiffness_margin, BranchMetric, ContinuationOptions,
    FrfBranch, FrfPoint,
};
pub use timeint::{rk4_steady_state, Rk4Options};

use std::f64::consts::PI;

use ndarray::{Array1, Array2};
use ndarray_linalg::Solve;

use crate::error::{Error, Result};

/// Reduced (or small full) oscillator in modal coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct OscillatorSystem {
    pub omega: Vec<f64>,
    pub zeta: Vec<f64>,
    /// Amplitude `F_r` of the `cos(W t)` forcing.
    pub forcing: Vec<f64>,
    /// `(r, i, j, c)`: `c q_i q_j` in equation `r`.
    pub quadratic: Vec<(usize, usize, usize, f64)>,
    /// `(r, i, j, k, c)`: `c q_i q_j q_k` in equation `r`.
    pub cubic: Vec<(usize, usize, usize, usize, f64)>,
    /// `(r, i, j, k, c)`: `c q_i q_j' q_k'` in equation `r` (time derivatives).
    pub velocity: Vec<(usize, usize, usize, usize, f64)>,
}

impl OscillatorSystem {
    pub fn linear(omega: Vec<f64>, zeta: Vec<f64>, forcing: Vec<f64>) -> Result<Self> {
        let sys = OscillatorSystem { omega, zeta, forcing, quadratic: vec![], cubic: vec![], velocity: vec![] };
        sys.validate()?;
        Ok(sys)
    }

    /// `q'' + 2 z w q' + w^2 q + gamma q^3 = F cos(W t)`.
    pub fn duffing(omega: f64, zeta: f64, gamma: f64, forcing: f64) -> Result<Self> {
        let mut sys = Self::linear(vec![omega], vec![zeta], vec![forcing])?;
        if gamma != 0.0 {
            sys.cubic.push((0, 0, 0, 0, gamma));
        }
        Ok(sys)
    }

    pub fn dofs(&self) -> usize {
        self.omega.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.omega.len();
        if n == 0 {
            return Err(Error::InvalidArgument("oscillator has no dofs".into()));
        }
        for (name, len) in [("zeta", self.zeta.len()), ("forcing", self.forcing.len())] {
            if len != n {
                return Err(Error::InvalidArgument(format!("{name} has {len} entries for {n} dofs")));
            }
        }
        if self.omega.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidArgument("natural frequencies must be positive".into()));
        }
        if self.zeta.iter().any(|z| !(z.is_finite() && *z >= 0.0)) {
            return Err(Error::InvalidArgument("damping ratios must be non-negative".into()));
        }
        let bad = self.quadratic.iter().any(|t| t.0 >= n || t.1 >= n || t.2 >= n)
            || self.cubic.iter().chain(&self.velocity).any(|t| t.0 >= n || t.1 >= n || t.2 >= n || t.3 >= n);
        if bad {
            return Err(Error::InvalidArgument("coefficient index outside the dof count".into()));
        }
        Ok(())
    }

    /// Undamped, unforced copy.
    pub fn conservative(&self) -> OscillatorSystem {
        OscillatorSystem { zeta: vec![0.0; self.dofs()], forcing: vec![0.0; self.dofs()], ..self.clone() }
    }

    pub fn with_forcing(mut self, zeta: Vec<f64>, forcing: Vec<f64>) -> Result<Self> {
        self.zeta = zeta;
        self.forcing = forcing;
        self.validate()?;
        Ok(self)
    }

    pub fn has_even_terms(&self) -> bool {
        !self.quadratic.is_empty()
    }

    /// Nonlinear restoring force at displacement `q` and velocity `v`.
    pub fn nonlinear_force(&self, q: &[f64], v: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dofs()];
        for &(r, i, j, c) in &self.quadratic {
            g[r] += c * q[i] * q[j];
        }
        for &(r, i, j, k, c) in &self.cubic {
            g[r] += c * q[i] * q[j] * q[k];
        }
        for &(r, i, j, k, c) in &self.velocity {
            g[r] += c * q[i] * v[j] * v[k];
        }
        g
    }

    /// Acceleration at time `t` under `F cos(big_omega t)`.
    pub fn acceleration(&self, t: f64, big_omega: f64, q: &[f64], v: &[f64]) -> Vec<f64> {
        let g = self.nonlinear_force(q, v);
        let ct = (big_omega * t).cos();
        (0..self.dofs())
            .map(|r| {
                self.forcing[r] * ct
                    - 2.0 * self.zeta[r] * self.omega[r] * v[r]
                    - self.omega[r].powi(2) * q[r]
                    - g[r]
            })
            .collect()
    }

    /// Linear steady-state amplitude of dof `r` at forcing frequency `w`.
    pub fn linear_amplitude(&self, r: usize, w: f64) -> f64 {
        let (wr, z) = (self.omega[r], self.zeta[r]);
        self.forcing[r].abs() / ((wr * wr - w * w).powi(2) + (2.0 * z * wr * w).powi(2)).sqrt()
    }
}

/// Number of Fourier coefficients per dof, `2H + 1`.
pub fn block_len(h: usize) -> usize {
    2 * h + 1
}

/// Index of the cosine (`sine = false`) or sine coefficient of harmonic `k >= 1` of `dof`.
pub fn coeff_index(h: usize, dof: usize, k: usize, sine: bool) -> usize {
    dof * block_len(h) + 2 * k - 1 + usize::from(sine)
}

/// AFT sample count `2^ceil(log2(8H))`.
pub fn time_samples(h: usize) -> usize {
    (8 * h).next_power_of_two()
}

/// Sampled basis `E[n][l]`, its `tau` derivative `D[n][l]` and the Galerkin projector `P[l][n]`.
struct Aft {
    e: Array2<f64>,
    d: Array2<f64>,
    p: Array2<f64>,
}

impl Aft {
    fn new(h: usize) -> Aft {
        let ns = time_samples(h);
        let l = block_len(h);
        let mut e = Array2::zeros((ns, l));
        let mut d = Array2::zeros((ns, l));
        let mut p = Array2::zeros((l, ns));
        for n in 0..ns {
            let tau = 2.0 * PI * n as f64 / ns as f64;
            e[[n, 0]] = 1.0;
            p[[0, n]] = 1.0 / ns as f64;
            for k in 1..=h {
                let (s, c) = (k as f64 * tau).sin_cos();
                let kf = k as f64;
                e[[n, 2 * k - 1]] = c;
                e[[n, 2 * k]] = s;
                d[[n, 2 * k - 1]] = -kf * s;
                d[[n, 2 * k]] = kf * c;
                p[[2 * k - 1, n]] = 2.0 * c / ns as f64;
                p[[2 * k, n]] = 2.0 * s / ns as f64;
            }
        }
        Aft { e, d, p }
    }
}

/// Residual and derivatives of the harmonic balance equations.
pub(crate) struct HbmEval {
    pub residual: Vec<f64>,
    pub jac_x: Array2<f64>,
    pub d_omega: Vec<f64>,
    /// Derivative with respect to a viscous coefficient added uniformly to every dof.
    pub d_damping: Vec<f64>,
}

/// Residual at state `x` and frequency `big_omega` with viscous coefficients
/// `damping[r]` (multiplying `q_r'` in time) and cosine forcing `forcing`.
pub(crate) fn assemble(
    sys: &OscillatorSystem,
    x: &[f64],
    big_omega: f64,
    h: usize,
    damping: &[f64],
    forcing: &[f64],
) -> HbmEval {
    let n = sys.dofs();
    let l = block_len(h);
    let dim = n * l;
    let mut res = vec![0.0; dim];
    let mut jac = Array2::zeros((dim, dim));
    let mut d_omega = vec![0.0; dim];
    let mut d_damping = vec![0.0; dim];
    let w = big_omega;
    for r in 0..n {
        let base = r * l;
        let (wr2, c) = (sys.omega[r].powi(2), damping[r]);
        res[base] = wr2 * x[base];
        jac[[base, base]] = wr2;
        for k in 1..=h {
            let kf = k as f64;
            let (ia, ib) = (base + 2 * k - 1, base + 2 * k);
            let (a, b) = (x[ia], x[ib]);
            let stiff = wr2 - kf * kf * w * w;
            res[ia] = stiff * a + c * w * kf * b;
            res[ib] = stiff * b - c * w * kf * a;
            jac[[ia, ia]] = stiff;
            jac[[ia, ib]] = c * w * kf;
            jac[[ib, ib]] = stiff;
            jac[[ib, ia]] = -c * w * kf;
            d_omega[ia] = -2.0 * kf * kf * w * a + c * kf * b;
            d_omega[ib] = -2.0 * kf * kf * w * b - c * kf * a;
            d_damping[ia] = w * kf * b;
            d_damping[ib] = -w * kf * a;
        }
        res[base + 1] -= forcing[r];
    }
    if sys.quadratic.is_empty() && sys.cubic.is_empty() && sys.velocity.is_empty() {
        return HbmEval { residual: res, jac_x: jac, d_omega, d_damping };
    }

    let aft = Aft::new(h);
    let ns = aft.e.nrows();
    let xm = Array2::from_shape_vec((n, l), x.to_vec()).expect("state length");
    let q = xm.dot(&aft.e.t());
    let p = xm.dot(&aft.d.t());
    let mut g = Array2::<f64>::zeros((n, ns));
    let mut g_omega = Array2::<f64>::zeros((n, ns));
    // dg_r/dq_i and dg_r/dp_i sampled, keyed by (r, i)
    let mut dq: Vec<((usize, usize), Vec<f64>)> = Vec::new();
    let mut dp: Vec<((usize, usize), Vec<f64>)> = Vec::new();
    fn slot(list: &mut Vec<((usize, usize), Vec<f64>)>, key: (usize, usize), ns: usize) -> &mut Vec<f64> {
        let pos = match list.iter().position(|e| e.0 == key) {
            Some(pos) => pos,
            None => {
                list.push((key, vec![0.0; ns]));
                list.len() - 1
            }
        };
        &mut list[pos].1
    }
    for &(r, i, j, c) in &sys.quadratic {
        for t in 0..ns {
            g[[r, t]] += c * q[[i, t]] * q[[j, t]];
        }
        let s = slot(&mut dq, (r, i), ns);
        for t in 0..ns {
            s[t] += c * q[[j, t]];
        }
        let s = slot(&mut dq, (r, j), ns);
        for t in 0..ns {
            s[t] += c * q[[i, t]];
        }
    }
    for &(r, i, j, k, c) in &sys.cubic {
        for t in 0..ns {
            g[[r, t]] += c * q[[i, t]] * q[[j, t]] * q[[k, t]];
        }
        for (a, b1, b2) in [(i, j, k), (j, i, k), (k, i, j)] {
            let s = slot(&mut dq, (r, a), ns);
            for t in 0..ns {
                s[t] += c * q[[b1, t]] * q[[b2, t]];
            }
        }
    }
    let w2 = w * w;
    for &(r, i, j, k, c) in &sys.velocity {
        for t in 0..ns {
            let v = c * q[[i, t]] * p[[j, t]] * p[[k, t]];
            g[[r, t]] += w2 * v;
            g_omega[[r, t]] += 2.0 * w * v;
        }
        let s = slot(&mut dq, (r, i), ns);
        for t in 0..ns {
            s[t] += w2 * c * p[[j, t]] * p[[k, t]];
        }
        let s = slot(&mut dp, (r, j), ns);
        for t in 0..ns {
            s[t] += w2 * c * q[[i, t]] * p[[k, t]];
        }
        let s = slot(&mut dp, (r, k), ns);
        for t in 0..ns {
            s[t] += w2 * c * q[[i, t]] * p[[j, t]];
        }
    }
    let rn = g.dot(&aft.p.t());
    let rw = g_omega.dot(&aft.p.t());
    for r in 0..n {
        for m in 0..l {
            res[r * l + m] += rn[[r, m]];
            d_omega[r * l + m] += rw[[r, m]];
        }
    }
    for (list, basis) in [(&dq, &aft.e), (&dp, &aft.d)] {
        for ((r, i), samples) in list {
            let mut weighted = basis.clone();
            for (t, mut row) in weighted.rows_mut().into_iter().enumerate() {
                row *= samples[t];
            }
            let block = aft.p.dot(&weighted);
            for m in 0..l {
                for c in 0..l {
                    jac[[r * l + m, i * l + c]] += block[[m, c]];
                }
            }
        }
    }
    HbmEval { residual: res, jac_x: jac, d_omega, d_damping }
}

fn check_state(sys: &OscillatorSystem, x: &[f64], h: usize) -> Result<()> {
    sys.validate()?;
    if h == 0 {
        return Err(Error::InvalidArgument("at least one harmonic is required".into()));
    }
    if x.len() != sys.dofs() * block_len(h) {
        return Err(Error::DimensionMismatch { expected: sys.dofs() * block_len(h), got: x.len() });
    }
    Ok(())
}

fn viscous(sys: &OscillatorSystem) -> Vec<f64> {
    sys.omega.iter().zip(&sys.zeta).map(|(w, z)| 2.0 * z * w).collect()
}

/// Fourier-Galerkin residual at state `x` and forcing frequency `big_omega`.
pub fn hbm_residual(sys: &OscillatorSystem, x: &[f64], big_omega: f64, h: usize) -> Result<Vec<f64>> {
    check_state(sys, x, h)?;
    Ok(assemble(sys, x, big_omega, h, &viscous(sys), &sys.forcing).residual)
}

/// Jacobian of [`hbm_residual`] with respect to `x`, and its derivative in `big_omega`.
pub fn hbm_jacobian(sys: &OscillatorSystem, x: &[f64], big_omega: f64, h: usize) -> Result<(Array2<f64>, Vec<f64>)> {
    check_state(sys, x, h)?;
    let ev = assemble(sys, x, big_omega, h, &viscous(sys), &sys.forcing);
    Ok((ev.jac_x, ev.d_omega))
}

/// Exact one-harmonic solution of the linear part.
pub fn linear_state(sys: &OscillatorSystem, big_omega: f64, h: usize) -> Vec<f64> {
    let mut x = vec![0.0; sys.dofs() * block_len(h)];
    for r in 0..sys.dofs() {
        let stiff = sys.omega[r].powi(2) - big_omega * big_omega;
        let damp = 2.0 * sys.zeta[r] * sys.omega[r] * big_omega;
        let den = stiff * stiff + damp * damp;
        x[coeff_index(h, r, 1, false)] = sys.forcing[r] * stiff / den;
        x[coeff_index(h, r, 1, true)] = sys.forcing[r] * damp / den;
    }
    x
}

/// Newton solution at fixed frequency; tolerance on the residual scaled by
/// `x_ref w_ref^2`.
pub fn solve_periodic(
    sys: &OscillatorSystem,
    big_omega: f64,
    h: usize,
    guess: Option<&[f64]>,
    tol: f64,
    max_iters: usize,
) -> Result<Vec<f64>> {
    let mut x = match guess {
        Some(g) => g.to_vec(),
        None => linear_state(sys, big_omega, h),
    };
    check_state(sys, &x, h)?;
    let (xr, wr) = reference_scales(sys);
    let c = viscous(sys);
    let mut last = f64::INFINITY;
    for _ in 0..=max_iters {
        let ev = assemble(sys, &x, big_omega, h, &c, &sys.forcing);
        last = crate::linalg::norm(&ev.residual) / (xr * wr * wr);
        if last <= tol {
            return Ok(x);
        }
        let dx = ev.jac_x.solve_into(Array1::from(ev.residual))?;
        x.iter_mut().zip(dx.iter()).for_each(|(a, d)| *a -= d);
    }
    Err(Error::NewtonDivergence { iters: max_iters, residual: last })
}

/// Displacement scale (largest linear resonant or static amplitude) and frequency scale.
pub(crate) fn reference_scales(sys: &OscillatorSystem) -> (f64, f64) {
    let wr = sys.omega[0];
    let xr = (0..sys.dofs())
        .map(|r| {
            let f = sys.forcing[r].abs();
            let w2 = sys.omega[r].powi(2);
            if sys.zeta[r] > 0.0 {
                f / (2.0 * sys.zeta[r] * w2)
            } else {
                f / w2
            }
        })
        .fold(0.0f64, f64::max);
    (if xr > 0.0 { xr } else { 1.0 }, wr)
}

/// Harmonic coefficients of the probe signal `sum_r w_r q_r`.
pub fn probe_coefficients(x: &[f64], h: usize, probe: &[f64]) -> Vec<f64> {
    let l = block_len(h);
    let mut z = vec![0.0; l];
    for (r, w) in probe.iter().enumerate() {
        for m in 0..l {
            z[m] += w * x[r * l + m];
        }
    }
    z
}

fn eval_series(z: &[f64], tau: f64) -> (f64, f64, f64) {
    let mut y = z[0];
    let (mut dy, mut ddy) = (0.0, 0.0);
    for k in 1..(z.len() + 1) / 2 {
        let kf = k as f64;
        let (s, c) = (kf * tau).sin_cos();
        let (a, b) = (z[2 * k - 1], z[2 * k]);
        y += a * c + b * s;
        dy += kf * (b * c - a * s);
        ddy -= kf * kf * (a * c + b * s);
    }
    (y, dy, ddy)
}

/// `max_tau |sum_r w_r q_r(tau)|`, refined by Newton on the derivative.
pub fn probe_amplitude(x: &[f64], h: usize, probe: &[f64]) -> f64 {
    let z = probe_coefficients(x, h, probe);
    let ns = 64 * h.max(1);
    let mut best = (0.0f64, 0.0f64);
    for n in 0..ns {
        let tau = 2.0 * PI * n as f64 / ns as f64;
        let y = eval_series(&z, tau).0.abs();
        if y > best.0 {
            best = (y, tau);
        }
    }
    let mut tau = best.1;
    for _ in 0..20 {
        let (_, dy, ddy) = eval_series(&z, tau);
        if ddy == 0.0 {
            break;
        }
        let step = (dy / ddy).clamp(-PI / ns as f64, PI / ns as f64);
        tau -= step;
        if step.abs() < 1e-15 {
            break;
        }
    }
    best.0.max(eval_series(&z, tau).0.abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_count_is_power_of_two() {
        assert_eq!(time_samples(1), 8);
        assert_eq!(time_samples(3), 32);
        assert_eq!(time_samples(7), 64);
    }

    #[test]
    fn linear_state_zeroes_residual() {
        let sys = OscillatorSystem::linear(vec![2.0, 5.0], vec![0.01, 0.03], vec![1.0, -0.5]).unwrap();
        let x = linear_state(&sys, 2.3, 3);
        let r = hbm_residual(&sys, &x, 2.3, 3).unwrap();
        assert!(r.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let mut sys = OscillatorSystem::linear(vec![1.0, 3.0], vec![0.02, 0.01], vec![0.3, 0.1]).unwrap();
        sys.quadratic.push((1, 0, 0, 0.7));
        sys.cubic.push((0, 0, 0, 1, 1.3));
        sys.cubic.push((0, 0, 0, 0, 0.4));
        sys.velocity.push((0, 0, 1, 0, 0.9));
        let h = 2;
        let x: Vec<f64> = (0..10).map(|i| 0.1 * ((i as f64) * 1.7).sin()).collect();
        let w = 1.2;
        let c = viscous(&sys);
        let ev = assemble(&sys, &x, w, h, &c, &sys.forcing);
        let eps = 1e-6;
        for col in 0..x.len() {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[col] += eps;
            xm[col] -= eps;
            let rp = assemble(&sys, &xp, w, h, &c, &sys.forcing).residual;
            let rm = assemble(&sys, &xm, w, h, &c, &sys.forcing).residual;
            for row in 0..x.len() {
                let fd = (rp[row] - rm[row]) / (2.0 * eps);
                assert!((fd - ev.jac_x[[row, col]]).abs() < 1e-7, "({row},{col}) {fd} {}", ev.jac_x[[row, col]]);
            }
        }
        let rp = assemble(&sys, &x, w + eps, h, &c, &sys.forcing).residual;
        let rm = assemble(&sys, &x, w - eps, h, &c, &sys.forcing).residual;
        for row in 0..x.len() {
            assert!(((rp[row] - rm[row]) / (2.0 * eps) - ev.d_omega[row]).abs() < 1e-7);
        }
    }

    #[test]
    fn amplitude_of_pure_harmonic() {
        let h = 2;
        let mut x = vec![0.0; 5];
        x[1] = 0.3;
        x[2] = -0.4;
        assert!((probe_amplitude(&x, h, &[1.0]) - 0.5).abs() < 1e-14);
    }
}
