//! Pseudo-arclength frequency sweeps and amplitude-parameterised backbones.

use ndarray::{Array1, Array2};
use ndarray_linalg::Solve;
use serde::Serialize;

use super::{assemble, block_len, coeff_index, linear_state, probe_amplitude, probe_coefficients, reference_scales, viscous, OscillatorSystem};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm};

#[derive(Clone, Debug)]
pub struct ContinuationOptions {
    pub harmonics: usize,
    /// Initial, smallest and largest arclength steps in scaled `(x / x_ref, W / w_ref)` space.
    pub ds: f64,
    pub ds_min: f64,
    pub ds_max: f64,
    /// Corrector tolerance on the residual scaled by `x_ref w_ref^2`.
    pub tol: f64,
    pub max_corrector_iters: usize,
    pub max_points: usize,
    /// Weights of the physical probe signal; `None` observes dof 0.
    pub probe: Option<Vec<f64>>,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        ContinuationOptions {
            harmonics: 3,
            ds: 0.01,
            ds_min: 1e-9,
            ds_max: 0.05,
            tol: 1e-10,
            max_corrector_iters: 12,
            max_points: 20_000,
            probe: None,
        }
    }
}

impl ContinuationOptions {
    fn probe_for(&self, n: usize) -> Result<Vec<f64>> {
        match &self.probe {
            Some(p) if p.len() == n => Ok(p.clone()),
            Some(p) => Err(Error::DimensionMismatch { expected: n, got: p.len() }),
            None => {
                let mut p = vec![0.0; n];
                p[0] = 1.0;
                Ok(p)
            }
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FrfPoint {
    /// Forcing (or oscillation) frequency in rad/s.
    pub omega: f64,
    /// Fourier coefficients, one `[c0, a1, b1, ...]` block per dof.
    pub coeffs: Vec<f64>,
    /// Max over one period of the probe displacement.
    pub amplitude: f64,
    pub iterations: usize,
    pub step: f64,
    /// Scaled residual norm at acceptance.
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FrfBranch {
    pub harmonics: usize,
    pub dofs: usize,
    pub probe: Vec<f64>,
    pub points: Vec<FrfPoint>,
    /// Why tracing stopped early, if it did.
    pub truncated: Option<String>,
}

impl FrfBranch {
    pub fn peak(&self) -> Option<&FrfPoint> {
        self.points.iter().max_by(|a, b| a.amplitude.total_cmp(&b.amplitude))
    }

    /// Number of turning points in frequency.
    pub fn fold_count(&self) -> usize {
        let signs: Vec<bool> = self.points.windows(2).map(|w| w[1].omega > w[0].omega).collect();
        signs.windows(2).filter(|s| s[0] != s[1]).count()
    }

    /// Probe harmonics `[c0, a1, b1, ...]` of point `i`.
    pub fn probe_harmonics(&self, i: usize) -> Vec<f64> {
        probe_coefficients(&self.points[i].coeffs, self.harmonics, &self.probe)
    }

    /// Largest ratio of an even harmonic to the fundamental over all dofs and points.
    pub fn even_harmonic_ratio(&self) -> f64 {
        let l = block_len(self.harmonics);
        let mut worst = 0.0f64;
        for p in &self.points {
            for r in 0..self.dofs {
                let fund = p.coeffs[r * l + 1].hypot(p.coeffs[r * l + 2]);
                let mut even = p.coeffs[r * l].abs();
                for k in (2..=self.harmonics).step_by(2) {
                    even = even.max(p.coeffs[coeff_index(self.harmonics, r, k, false)].hypot(p.coeffs[coeff_index(self.harmonics, r, k, true)]));
                }
                if fund > 0.0 {
                    worst = worst.max(even / fund);
                }
            }
        }
        worst
    }
}

struct Scaled<'a> {
    sys: &'a OscillatorSystem,
    h: usize,
    xr: f64,
    wr: f64,
    damping: Vec<f64>,
    forcing: Vec<f64>,
}

struct ScaledEval {
    r: Vec<f64>,
    ju: Array2<f64>,
    dw: Vec<f64>,
    dmu: Vec<f64>,
}

impl Scaled<'_> {
    fn eval(&self, u: &[f64], w: f64, mu: f64) -> ScaledEval {
        let x: Vec<f64> = u.iter().map(|v| v * self.xr).collect();
        let damping: Vec<f64> = self.damping.iter().map(|c| c + mu * self.wr).collect();
        let ev = assemble(self.sys, &x, w * self.wr, self.h, &damping, &self.forcing);
        let rs = self.xr * self.wr * self.wr;
        ScaledEval {
            r: ev.residual.iter().map(|v| v / rs).collect(),
            ju: ev.jac_x / (self.wr * self.wr),
            dw: ev.d_omega.iter().map(|v| v * self.wr / rs).collect(),
            dmu: ev.d_damping.iter().map(|v| v * self.wr / rs).collect(),
        }
    }

    fn point(&self, y: &[f64], probe: &[f64], iterations: usize, step: f64, residual: f64) -> FrfPoint {
        let n = y.len() - 1;
        let coeffs: Vec<f64> = y[..n].iter().map(|v| v * self.xr).collect();
        FrfPoint {
            omega: y[n] * self.wr,
            amplitude: probe_amplitude(&coeffs, self.h, probe),
            coeffs,
            iterations,
            step,
            residual,
        }
    }
}

/// Solve the square system `[J_u  d_w ; t^T] dz = rhs`.
fn bordered_solve(ev: &ScaledEval, t: &[f64], rhs: Vec<f64>) -> Result<Vec<f64>> {
    let n = ev.r.len();
    let mut a = Array2::zeros((n + 1, n + 1));
    a.slice_mut(ndarray::s![..n, ..n]).assign(&ev.ju);
    for i in 0..n {
        a[[i, n]] = ev.dw[i];
    }
    for (j, &tj) in t.iter().enumerate() {
        a[[n, j]] = tj;
    }
    Ok(a.solve_into(Array1::from(rhs))?.to_vec())
}

fn unit(v: Vec<f64>) -> Vec<f64> {
    let n = norm(&v);
    v.into_iter().map(|x| x / n).collect()
}

/// Newton on `R(y) = 0` and `t . (y - y_pred) = 0`. Returns the point, iteration
/// count and final residual norm.
fn correct(s: &Scaled, pred: &[f64], t: &[f64], tol: f64, max_iters: usize) -> Option<(Vec<f64>, usize, f64)> {
    let n = pred.len() - 1;
    let mut y = pred.to_vec();
    for it in 0..=max_iters {
        let ev = s.eval(&y[..n], y[n], 0.0);
        let rn = norm(&ev.r);
        if !rn.is_finite() {
            return None;
        }
        let arc = dot(t, &y.iter().zip(pred).map(|(a, b)| a - b).collect::<Vec<_>>());
        if it > 0 && rn <= tol && arc.abs() <= tol {
            return Some((y, it, rn));
        }
        if it == max_iters {
            break;
        }
        let mut rhs: Vec<f64> = ev.r.iter().map(|v| -v).collect();
        rhs.push(-arc);
        let dz = bordered_solve(&ev, t, rhs).ok()?;
        y.iter_mut().zip(&dz).for_each(|(a, d)| *a += d);
    }
    None
}

/// Forced response traced from `omega_range.0` towards `omega_range.1` by
/// pseudo-arclength continuation with a secant predictor. Turning points are
/// followed; the branch ends when it leaves the window.
pub fn continue_frf(sys: &OscillatorSystem, omega_range: (f64, f64), opts: &ContinuationOptions) -> Result<FrfBranch> {
    sys.validate()?;
    let h = opts.harmonics;
    if h == 0 {
        return Err(Error::InvalidArgument("at least one harmonic is required".into()));
    }
    let (w0, w1) = omega_range;
    if !(w0.is_finite() && w1.is_finite() && w0 > 0.0 && w1 > 0.0 && w0 != w1) {
        return Err(Error::InvalidArgument(format!("invalid frequency window ({w0}, {w1})")));
    }
    if sys.zeta.iter().zip(&sys.forcing).any(|(z, f)| *f != 0.0 && *z <= 0.0) {
        return Err(Error::InvalidArgument("forced responses need positive damping on forced dofs".into()));
    }
    let probe = opts.probe_for(sys.dofs())?;
    let (xr, wr) = reference_scales(sys);
    let s = Scaled { sys, h, xr, wr, damping: viscous(sys), forcing: sys.forcing.clone() };
    let (lo, hi) = (w0.min(w1) / wr, w0.max(w1) / wr);
    let sweep_sign = if w1 > w0 { 1.0 } else { -1.0 };
    let dim = sys.dofs() * block_len(h);

    // start: fixed-frequency Newton from the linear response
    let mut y: Vec<f64> = linear_state(sys, w0, h).iter().map(|v| v / xr).collect();
    y.push(w0 / wr);
    let mut e_w = vec![0.0; dim + 1];
    e_w[dim] = 1.0;
    let (start, iters, res) = correct(&s, &y, &e_w, opts.tol, 4 * opts.max_corrector_iters)
        .ok_or_else(|| Error::Continuation(format!("no converged start at W = {w0}")))?;
    let mut points = vec![s.point(&start, &probe, iters, 0.0, res)];
    let ev = s.eval(&start[..dim], start[dim], 0.0);
    let mut rhs = vec![0.0; dim];
    rhs.push(1.0);
    let mut tangent = unit(bordered_solve(&ev, &e_w, rhs)?);
    if tangent[dim] * sweep_sign < 0.0 {
        tangent.iter_mut().for_each(|v| *v = -*v);
    }
    let mut prev = start.clone();
    let mut cur = start;
    let mut ds = opts.ds;
    let mut truncated = None;
    loop {
        if points.len() >= opts.max_points {
            truncated = Some(format!("point limit {} reached at W = {}", opts.max_points, cur[dim] * wr));
            break;
        }
        let dir = if points.len() > 1 {
            unit(cur.iter().zip(&prev).map(|(a, b)| a - b).collect())
        } else {
            tangent.clone()
        };
        let pred: Vec<f64> = cur.iter().zip(&dir).map(|(a, d)| a + ds * d).collect();
        let accepted = correct(&s, &pred, &dir, opts.tol, opts.max_corrector_iters).filter(|(y, _, _)| {
            let jump = norm(&y.iter().zip(&cur).map(|(a, b)| a - b).collect::<Vec<_>>());
            jump <= 2.0 * ds
        });
        match accepted {
            None => {
                ds *= 0.5;
                if ds < opts.ds_min {
                    truncated = Some(format!("corrector failed with step below {:.1e} at W = {}", opts.ds_min, cur[dim] * wr));
                    break;
                }
            }
            Some((y, iters, res)) => {
                if y[dim] < lo || y[dim] > hi {
                    break;
                }
                points.push(s.point(&y, &probe, iters, ds, res));
                prev = std::mem::replace(&mut cur, y);
                if iters <= 3 {
                    ds = (ds * 1.5).min(opts.ds_max);
                } else if iters >= 8 {
                    ds *= 0.7;
                }
            }
        }
    }
    Ok(FrfBranch { harmonics: h, dofs: sys.dofs(), probe, points, truncated })
}

/// Conservative periodic orbits of `dof` for prescribed fundamental cosine
/// amplitudes. The phase is fixed by `b1 = 0` and a uniform unfolding damping
/// `mu` (zero at convergence) keeps the system square.
pub fn backbone(sys: &OscillatorSystem, dof: usize, amplitudes: &[f64], opts: &ContinuationOptions) -> Result<FrfBranch> {
    let cons = sys.conservative();
    cons.validate()?;
    let h = opts.harmonics;
    if h == 0 {
        return Err(Error::InvalidArgument("at least one harmonic is required".into()));
    }
    if dof >= cons.dofs() {
        return Err(Error::InvalidArgument(format!("dof {dof} out of range")));
    }
    if amplitudes.is_empty() || amplitudes.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
        return Err(Error::InvalidArgument("backbone amplitudes must be positive".into()));
    }
    let probe = opts.probe_for(cons.dofs())?;
    let xr = amplitudes.iter().fold(0.0f64, |m, a| m.max(*a));
    let wr = cons.omega[dof];
    let s = Scaled { sys: &cons, h, xr, wr, damping: vec![0.0; cons.dofs()], forcing: vec![0.0; cons.dofs()] };
    let dim = cons.dofs() * block_len(h);
    let (ia, ib) = (coeff_index(h, dof, 1, false), coeff_index(h, dof, 1, true));

    // unknowns [u (dim), w, mu]
    let mut z = vec![0.0; dim + 2];
    z[ia] = amplitudes[0] / xr;
    z[dim] = 1.0;
    let mut history: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut points = Vec::new();
    let mut truncated = None;
    for &amp in amplitudes {
        let target = amp / xr;
        if history.len() >= 2 {
            let (a0, z0) = &history[history.len() - 2];
            let (a1, z1) = &history[history.len() - 1];
            let f = (target - a0) / (a1 - a0);
            z = z0.iter().zip(z1).map(|(p, q)| p + f * (q - p)).collect();
        } else if let Some((_, z1)) = history.last() {
            z = z1.clone();
            z[ia] = target;
        }
        let mut converged = None;
        for it in 0..=4 * opts.max_corrector_iters {
            let ev = s.eval(&z[..dim], z[dim], z[dim + 1]);
            let mut r = ev.r.clone();
            r.push(z[ib]);
            r.push(z[ia] - target);
            let rn = norm(&r);
            if !rn.is_finite() {
                break;
            }
            if rn <= opts.tol {
                converged = Some((it, rn));
                break;
            }
            let n = dim + 2;
            let mut a = Array2::zeros((n, n));
            a.slice_mut(ndarray::s![..dim, ..dim]).assign(&ev.ju);
            for i in 0..dim {
                a[[i, dim]] = ev.dw[i];
                a[[i, dim + 1]] = ev.dmu[i];
            }
            a[[dim, ib]] = 1.0;
            a[[dim + 1, ia]] = 1.0;
            let Ok(dz) = a.solve_into(Array1::from(r)) else { break };
            z.iter_mut().zip(dz.iter()).for_each(|(p, d)| *p -= d);
        }
        match converged {
            Some((iters, res)) => {
                points.push(s.point(&z[..=dim], &probe, iters, 0.0, res));
                history.push((target, z.clone()));
            }
            None => {
                truncated = Some(format!("Newton failed at amplitude {amp}"));
                break;
            }
        }
    }
    Ok(FrfBranch { harmonics: h, dofs: cons.dofs(), probe, points, truncated })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BranchMetric {
    MaxRelative,
    RmsRelative,
}

/// Runs of consecutive points with strictly increasing frequency.
fn increasing_segments(b: &FrfBranch) -> Vec<&[FrfPoint]> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=b.points.len() {
        if i == b.points.len() || b.points[i].omega <= b.points[i - 1].omega {
            if i - start >= 2 {
                out.push(&b.points[start..i]);
            }
            start = i;
        }
    }
    out
}

fn interpolate(seg: &[FrfPoint], w: f64) -> Option<f64> {
    let k = seg.windows(2).position(|p| p[0].omega <= w && w <= p[1].omega)?;
    let (a, b) = (&seg[k], &seg[k + 1]);
    let f = (w - a.omega) / (b.omega - a.omega);
    Some(a.amplitude + f * (b.amplitude - a.amplitude))
}

/// Relative amplitude deviation of `a` from `b` at matched frequencies, on
/// frequency-increasing segments. Where `b` is multivalued the closest
/// amplitude is used.
pub fn compare_branches(a: &FrfBranch, b: &FrfBranch, metric: BranchMetric) -> Result<f64> {
    let segs_b = increasing_segments(b);
    let mut devs = Vec::new();
    for seg in increasing_segments(a) {
        for p in seg {
            let best = segs_b
                .iter()
                .filter_map(|s| interpolate(s, p.omega))
                .map(|amp| (p.amplitude - amp).abs() / amp.abs().max(f64::MIN_POSITIVE))
                .min_by(f64::total_cmp);
            if let Some(d) = best {
                devs.push(d);
            }
        }
    }
    if devs.is_empty() {
        return Err(Error::InvalidArgument("branches share no frequency window".into()));
    }
    Ok(match metric {
        BranchMetric::MaxRelative => devs.iter().fold(0.0f64, |m, d| m.max(*d)),
        BranchMetric::RmsRelative => (devs.iter().map(|d| d * d).sum::<f64>() / devs.len() as f64).sqrt(),
    })
}

/// Resonant (upper) branch: the first frequency-increasing run, cut at its
/// amplitude maximum, keeping amplitudes above half that maximum.
fn upper_branch(b: &FrfBranch) -> Vec<&FrfPoint> {
    let Some(seg) = increasing_segments(b).into_iter().next() else { return vec![] };
    let top = seg.iter().enumerate().max_by(|x, y| x.1.amplitude.total_cmp(&y.1.amplitude)).map_or(0, |t| t.0);
    let peak = seg[top].amplitude;
    seg[..=top].iter().filter(|p| p.amplitude > 0.5 * peak).collect()
}

/// Smallest `(W_a - W_b) / W_b` at equal amplitude along the upper branches.
/// Positive values mean `a` is stiffer than `b` everywhere on the overlap.
pub fn upper_branch_stiffness_margin(a: &FrfBranch, b: &FrfBranch) -> Result<f64> {
    let ua = upper_branch(a);
    let ub = upper_branch(b);
    let mut margin: Option<f64> = None;
    for p in &ua {
        let hit = ub.windows(2).find(|s| s[0].amplitude <= p.amplitude && p.amplitude <= s[1].amplitude);
        if let Some(s) = hit {
            let f = (p.amplitude - s[0].amplitude) / (s[1].amplitude - s[0].amplitude);
            let wb = s[0].omega + f * (s[1].omega - s[0].omega);
            let m = (p.omega - wb) / wb;
            margin = Some(margin.map_or(m, |x: f64| x.min(m)));
        }
    }
    margin.ok_or_else(|| Error::InvalidArgument("upper branches share no amplitude range".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_branch_follows_exact_response() {
        let sys = OscillatorSystem::linear(vec![1.0], vec![0.02], vec![0.01]).unwrap();
        let br = continue_frf(&sys, (0.8, 1.2), &ContinuationOptions { harmonics: 1, ..Default::default() }).unwrap();
        assert!(br.truncated.is_none());
        assert!(br.points.len() > 10);
        for p in &br.points {
            let exact = sys.linear_amplitude(0, p.omega);
            assert!((p.amplitude / exact - 1.0).abs() < 1e-7, "{} {} {}", p.omega, p.amplitude, exact);
        }
        assert_eq!(br.fold_count(), 0);
    }

    #[test]
    fn self_comparison_is_zero() {
        let sys = OscillatorSystem::duffing(1.0, 0.01, 0.5, 0.01).unwrap();
        let br = continue_frf(&sys, (0.8, 1.3), &ContinuationOptions::default()).unwrap();
        assert_eq!(compare_branches(&br, &br, BranchMetric::MaxRelative).unwrap(), 0.0);
    }

    #[test]
    fn linear_backbone_is_vertical() {
        let sys = OscillatorSystem::linear(vec![2.0], vec![0.0], vec![0.0]).unwrap();
        let bb = backbone(&sys, 0, &[0.1, 0.2, 0.3], &ContinuationOptions::default()).unwrap();
        assert_eq!(bb.points.len(), 3);
        for p in &bb.points {
            assert!((p.omega - 2.0).abs() < 1e-12);
        }
    }
}
