//! Corrected reduced models of flat structures.
//!
//! Non-bending modes `s` are driven quadratically by the bending masters and
//! soften the cubic stiffness of the masters. Three routes compute the
//! corrected coefficients `Gamma`:
//!
//! * static condensation over the modal basis ([`condensed_cubic`]), with the
//!   per-mode correction factors of [`CorrectionSpectrum`];
//! * static modal derivatives ([`smd_same`], [`smd_condensed_cubic`]), which
//!   replace the modal sum by one linear solve;
//! * the single-mode normal form ([`nnm_rom`]), which keeps slave inertia.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::fe::FeModel;
use crate::hbm::OscillatorSystem;
use crate::linalg::{dot, SymmetricSolver};
use crate::modal::{ModeLabel, ModeSet};
use crate::step::CouplingCoefficients;

/// Correction factors normalised by `|beta^p_ppp|` below this are negligible.
pub const NEGLIGIBLE_FACTOR: f64 = 1e-15;

/// `Gamma^r_ijk` keyed `(r, i, j, k)` with `i <= j <= k` (mode indices).
pub type GammaMap = BTreeMap<(usize, usize, usize, usize), f64>;

/// Which modes are condensed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SlaveSet {
    /// Every computed mode labelled non-bending.
    NonBending,
    /// Every computed mode that is not a master.
    AllOthers,
}

pub fn slave_modes(modes: &ModeSet, masters: &[usize], set: SlaveSet) -> Vec<usize> {
    (0..modes.len())
        .filter(|k| !masters.contains(k))
        .filter(|&k| set == SlaveSet::AllOthers || modes.labels[k] == ModeLabel::NonBending)
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorrectionEntry {
    pub mode: usize,
    /// `C^{ps}_ppp = 2 (alpha^s_pp)^2 / w_s^2`.
    pub factor: f64,
    pub omega: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpectrumOrder {
    ByFrequency,
    ByDecreasingFactor,
}

/// Per-slave corrections of `beta^p_ppp`.
#[derive(Clone, Debug)]
pub struct CorrectionSpectrum {
    pub master: usize,
    /// `beta^p_ppp`, the uncorrected coefficient.
    pub beta: f64,
    /// Entries in ascending frequency order.
    pub entries: Vec<CorrectionEntry>,
}

impl CorrectionSpectrum {
    pub fn normalized(&self, e: &CorrectionEntry) -> f64 {
        e.factor / self.beta.abs()
    }

    /// `beta - sum_s C`.
    pub fn gamma(&self) -> f64 {
        self.beta - self.entries.iter().map(|e| e.factor).sum::<f64>()
    }

    pub fn ordered(&self, order: SpectrumOrder) -> Vec<CorrectionEntry> {
        let mut v = self.entries.clone();
        if order == SpectrumOrder::ByDecreasingFactor {
            v.sort_by(|a, b| b.factor.total_cmp(&a.factor).then(a.mode.cmp(&b.mode)));
        }
        v
    }

    pub fn relevant(&self, threshold: f64) -> Vec<CorrectionEntry> {
        self.ordered(SpectrumOrder::ByDecreasingFactor)
            .into_iter()
            .filter(|e| self.normalized(e) > threshold)
            .collect()
    }

    /// Share of the condensed modes whose normalised factor exceeds `threshold`.
    pub fn relevant_fraction(&self, threshold: f64) -> f64 {
        if self.entries.is_empty() {
            return 0.0;
        }
        self.relevant(threshold).len() as f64 / self.entries.len() as f64
    }

    /// Partial `Gamma(m)` after condensing the first `m` modes, `m = 0..=len`.
    pub fn convergence(&self, order: SpectrumOrder) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.entries.len() + 1);
        let mut g = self.beta;
        out.push(g);
        for e in self.ordered(order) {
            g -= e.factor;
            out.push(g);
        }
        out
    }

    /// Number of modes in the reduced basis (master plus condensed modes)
    /// needed for `|Gamma(m)/Gamma - 1| <= tol`.
    pub fn modes_to_tolerance(&self, order: SpectrumOrder, tol: f64) -> Option<usize> {
        let series = self.convergence(order);
        let g = *series.last()?;
        series.iter().position(|v| ((v - g) / g).abs() <= tol).map(|m| m + 1)
    }
}

/// Correction factors of master `p` over `slaves`, from `alpha^s_pp`
/// projected on every slave (one single-mode STEP call).
pub fn correction_spectrum(
    p: usize,
    coeffs: &CouplingCoefficients,
    modes: &ModeSet,
    slaves: &[usize],
) -> Result<CorrectionSpectrum> {
    let beta = coeffs.require_beta(p, p, p, p)?;
    let mut entries = Vec::with_capacity(slaves.len());
    for &s in slaves {
        if s == p {
            continue;
        }
        let w = modes.omega[s];
        if !(w > 0.0) {
            return Err(Error::InvalidArgument(format!("mode {s} has zero frequency; structure is not constrained")));
        }
        let a = coeffs.require_alpha(s, p, p)?;
        entries.push(CorrectionEntry { mode: s, factor: 2.0 * a * a / (w * w), omega: w });
    }
    entries.sort_by(|a, b| a.omega.total_cmp(&b.omega).then(a.mode.cmp(&b.mode)));
    Ok(CorrectionSpectrum { master: p, beta, entries })
}

/// `alpha^r_as` for master `r, a` and slave `s` from the master-subset
/// coefficients, using the symmetry of the potential-derived quadratic tensor.
fn alpha_master_slave(coeffs: &CouplingCoefficients, r: usize, a: usize, s: usize) -> Result<f64> {
    if r == a {
        Ok(2.0 * coeffs.require_alpha(s, a, a)?)
    } else {
        coeffs.require_alpha(s, a, r)
    }
}

/// `C^{rs}_ijk = (1/w_s^2) sum over splittings {i,j,k} = a + {b,c} of alpha^r_as alpha^s_bc`.
pub fn correction_factor(
    coeffs: &CouplingCoefficients,
    modes: &ModeSet,
    r: usize,
    (i, j, k): (usize, usize, usize),
    s: usize,
) -> Result<f64> {
    let mut t = [i, j, k];
    t.sort_unstable();
    let mut acc = 0.0;
    let mut used: Vec<usize> = Vec::with_capacity(3);
    for pos in 0..3 {
        let a = t[pos];
        if used.contains(&a) {
            continue;
        }
        used.push(a);
        let rest: Vec<usize> = (0..3).filter(|&q| q != pos).map(|q| t[q]).collect();
        acc += alpha_master_slave(coeffs, r, a, s)? * coeffs.require_alpha(s, rest[0], rest[1])?;
    }
    Ok(acc / modes.omega[s].powi(2))
}

/// `Gamma^r_ijk = beta^r_ijk - sum_s C^{rs}_ijk` for all master combinations.
pub fn condensed_cubic(
    masters: &[usize],
    coeffs: &CouplingCoefficients,
    modes: &ModeSet,
    slaves: &[usize],
) -> Result<GammaMap> {
    let mut ms = masters.to_vec();
    ms.sort_unstable();
    ms.dedup();
    if ms.is_empty() {
        return Err(Error::InvalidArgument("no master modes".into()));
    }
    if let Some(s) = slaves.iter().find(|s| ms.contains(s)) {
        return Err(Error::InvalidArgument(format!("mode {s} is both master and slave")));
    }
    for &s in slaves {
        if !(modes.omega[s] > 0.0) {
            return Err(Error::InvalidArgument(format!("mode {s} has zero frequency")));
        }
    }
    let mut out = GammaMap::new();
    for &r in &ms {
        for (x, &i) in ms.iter().enumerate() {
            for (y, &j) in ms.iter().enumerate().skip(x) {
                for &k in ms.iter().skip(y) {
                    let mut g = coeffs.require_beta(r, i, j, k)?;
                    for &s in slaves {
                        g -= correction_factor(coeffs, modes, r, (i, j, k), s)?;
                    }
                    out.insert((r, i, j, k), g);
                }
            }
        }
    }
    Ok(out)
}

/// Static modal derivative `theta_pr` (mass-normalised modes, unit modal amplitudes).
#[derive(Clone, Debug)]
pub struct Smd {
    pub indices: (usize, usize),
    pub vector: Vec<f64>,
    pub amplitude: f64,
}

fn even_force(model: &FeModel, v: &[f64], lambda: f64) -> Result<Vec<f64>> {
    let xp: Vec<f64> = v.iter().map(|a| lambda * a).collect();
    let xm: Vec<f64> = v.iter().map(|a| -lambda * a).collect();
    let fp = model.nonlinear_force(&xp)?;
    let fm = model.nonlinear_force(&xm)?;
    Ok(fp.iter().zip(&fm).map(|(a, b)| a + b).collect())
}

/// `theta = -K^{-1} (f_nl(l v) + f_nl(-l v)) / l^2` for an arbitrary shape `v`.
pub fn smd_of_shape(model: &FeModel, k: &SymmetricSolver, v: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument("SMD amplitude must be positive".into()));
    }
    let rhs: Vec<f64> = even_force(model, v, lambda)?.iter().map(|f| -f / (lambda * lambda)).collect();
    k.solve(&rhs)
}

/// `theta_pp`.
pub fn smd_same(model: &FeModel, k: &SymmetricSolver, modes: &ModeSet, p: usize, lambda: f64) -> Result<Smd> {
    let vector = smd_of_shape(model, k, &modes.shapes[p], lambda)?;
    Ok(Smd { indices: (p, p), vector, amplitude: lambda })
}

/// `theta_pr` from six evaluations:
/// `-K^{-1} [f(l(p+r)) + f(-l(p+r)) - f(lp) - f(-lp) - f(lr) - f(-lr)] / (2 l^2)`.
pub fn smd_cross(
    model: &FeModel,
    k: &SymmetricSolver,
    modes: &ModeSet,
    p: usize,
    r: usize,
    lambda: f64,
) -> Result<Smd> {
    if p == r {
        return smd_same(model, k, modes, p, lambda);
    }
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument("SMD amplitude must be positive".into()));
    }
    let sum: Vec<f64> = modes.shapes[p].iter().zip(&modes.shapes[r]).map(|(a, b)| a + b).collect();
    let fs = even_force(model, &sum, lambda)?;
    let fp = even_force(model, &modes.shapes[p], lambda)?;
    let fr = even_force(model, &modes.shapes[r], lambda)?;
    let rhs: Vec<f64> =
        (0..fs.len()).map(|i| -(fs[i] - fp[i] - fr[i]) / (2.0 * lambda * lambda)).collect();
    Ok(Smd { indices: (p.min(r), p.max(r)), vector: k.solve(&rhs)?, amplitude: lambda })
}

/// `x(q) = q phi + q^2 theta / 2`.
pub fn manifold_displacement(q: f64, phi: &[f64], theta: &[f64]) -> Vec<f64> {
    phi.iter().zip(theta).map(|(a, b)| q * a + 0.5 * q * q * b).collect()
}

/// Projected odd part `phi_k^T (f_nl(x(t)) - f_nl(x(-t))) / (2 m_k)` on the
/// quadratic manifold of shape `v`.
fn manifold_odd(model: &FeModel, v: &[f64], theta: &[f64], t: f64, modes: &ModeSet, proj: &[usize]) -> Result<Vec<f64>> {
    let fp = model.nonlinear_force(&manifold_displacement(t, v, theta))?;
    let fm = model.nonlinear_force(&manifold_displacement(-t, v, theta))?;
    let d: Vec<f64> = fp.iter().zip(&fm).map(|(a, b)| 0.5 * (a - b)).collect();
    Ok(proj.iter().map(|&k| dot(&modes.shapes[k], &d) / modes.modal_masses[k]).collect())
}

/// Cubic coefficient of the force projected on each mode of `proj` along the
/// quadratic manifold `x(q) = q v + q^2 theta_vv / 2`.
///
/// The odd part is `G t^3 + D t^5`; evaluating at `t` and `2t` and combining
/// `(32 o(t) - o(2t)) / (24 t^3)` removes the quintic term exactly.
pub fn smd_cubic_along(
    model: &FeModel,
    k: &SymmetricSolver,
    v: &[f64],
    t: f64,
    modes: &ModeSet,
    proj: &[usize],
) -> Result<Vec<f64>> {
    let theta = smd_of_shape(model, k, v, t)?;
    let o1 = manifold_odd(model, v, &theta, t, modes, proj)?;
    let o2 = manifold_odd(model, v, &theta, 2.0 * t, modes, proj)?;
    Ok(o1.iter().zip(&o2).map(|(a, b)| (32.0 * a - b) / (24.0 * t.powi(3))).collect())
}

/// `Gamma^p_ppp` from the SMD manifold of mode `p`.
pub fn smd_condensed_cubic(model: &FeModel, k: &SymmetricSolver, modes: &ModeSet, p: usize, t: f64) -> Result<f64> {
    Ok(smd_cubic_along(model, k, &modes.shapes[p], t, modes, &[p])?[0])
}

/// All `Gamma^r_ijk` for masters `{i, j}` (`r` in the pair) from the SMD
/// manifolds along `phi_i`, `phi_j`, `phi_i + phi_j` and `phi_i - phi_j`.
pub fn smd_mixed_gamma(
    model: &FeModel,
    k: &SymmetricSolver,
    modes: &ModeSet,
    (i, j): (usize, usize),
    t: f64,
) -> Result<GammaMap> {
    if i == j {
        return Err(Error::InvalidArgument("mixed coefficients need two distinct modes".into()));
    }
    let (i, j) = (i.min(j), i.max(j));
    let proj = [i, j];
    let comb = |a: f64, b: f64| -> Vec<f64> {
        modes.shapes[i].iter().zip(&modes.shapes[j]).map(|(x, y)| a * x + b * y).collect()
    };
    let c10 = smd_cubic_along(model, k, &modes.shapes[i], t, modes, &proj)?;
    let c01 = smd_cubic_along(model, k, &modes.shapes[j], t, modes, &proj)?;
    let c11 = smd_cubic_along(model, k, &comb(1.0, 1.0), t, modes, &proj)?;
    let c1m = smd_cubic_along(model, k, &comb(1.0, -1.0), t, modes, &proj)?;
    let mut out = GammaMap::new();
    for (row, &r) in proj.iter().enumerate() {
        let (iii, jjj) = (c10[row], c01[row]);
        let s = c11[row] - iii - jjj;
        let d = c1m[row] - iii + jjj;
        out.insert((r, i, i, i), iii);
        out.insert((r, j, j, j), jjj);
        out.insert((r, i, i, j), 0.5 * (s - d));
        out.insert((r, i, j, j), 0.5 * (s + d));
    }
    Ok(out)
}

/// Single-mode normal-form coefficients.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NnmCoefficients {
    /// Coefficient of `R^3`.
    pub cubic: f64,
    /// Coefficient of `R Rdot^2`.
    pub velocity: f64,
    /// `min |w_s - 2 w_p|` over contributing slaves (infinite if none).
    pub resonance_gap: f64,
}

/// Relative tolerance on `|w_s^2 - 4 w_p^2| / w_s^2` below which the normal form is rejected.
pub const RESONANCE_TOL: f64 = 1e-3;

/// Normal-form coefficients from `beta^p_ppp` and `(mode, alpha^s_pp, w_s)` per slave.
pub fn nnm_coefficients(omega_p: f64, beta: f64, slaves: &[(usize, f64, f64)]) -> Result<NnmCoefficients> {
    let mut cubic = beta;
    let mut velocity = 0.0;
    let mut gap = f64::INFINITY;
    for &(s, a_spp, ws) in slaves {
        let a_pps = 2.0 * a_spp;
        let c = a_pps * a_spp / (ws * ws);
        if c == 0.0 || c.abs() <= NEGLIGIBLE_FACTOR * beta.abs() {
            continue;
        }
        let (ws2, wp2) = (ws * ws, omega_p * omega_p);
        let rel = (ws2 - 4.0 * wp2).abs() / ws2;
        if rel < RESONANCE_TOL {
            return Err(Error::InternalResonance { mode: s, gap: rel });
        }
        gap = gap.min((ws - 2.0 * omega_p).abs());
        cubic -= c * (ws2 - 2.0 * wp2) / (ws2 - 4.0 * wp2);
        velocity += c * 2.0 / (ws2 - 4.0 * wp2);
    }
    Ok(NnmCoefficients { cubic, velocity, resonance_gap: gap })
}

/// Condensed coefficient `beta - sum 2 alpha^2 / w_s^2` over the same slave list.
pub fn condensed_from_parts(beta: f64, slaves: &[(usize, f64, f64)]) -> f64 {
    beta - slaves.iter().map(|&(_, a, w)| 2.0 * a * a / (w * w)).sum::<f64>()
}

/// Few-dof oscillator with corrected cubic stiffness.
#[derive(Clone, Debug)]
pub struct ReducedModel {
    pub masters: Vec<usize>,
    pub omega: Vec<f64>,
    pub zeta: Vec<f64>,
    /// `Gamma^r_ijk` keyed by mode indices.
    pub gamma: GammaMap,
    /// Single-master normal form only: coefficient of `q q'^2`.
    pub nnm_velocity_coeff: Option<f64>,
    /// Modal force amplitude per master.
    pub forcing: Vec<f64>,
}

impl ReducedModel {
    pub fn from_gamma(masters: &[usize], modes: &ModeSet, gamma: GammaMap, zeta: &[f64]) -> Result<Self> {
        if zeta.len() != masters.len() {
            return Err(Error::DimensionMismatch { expected: masters.len(), got: zeta.len() });
        }
        for &(r, i, j, k) in gamma.keys() {
            if !(i <= j && j <= k) || ![r, i, j, k].iter().all(|m| masters.contains(m)) {
                return Err(Error::InvalidArgument(format!("Gamma^{r}_{i}{j}{k} outside the master set")));
            }
        }
        Ok(ReducedModel {
            masters: masters.to_vec(),
            omega: masters.iter().map(|&m| modes.omega[m]).collect(),
            zeta: zeta.to_vec(),
            gamma,
            nnm_velocity_coeff: None,
            forcing: vec![0.0; masters.len()],
        })
    }

    pub fn with_forcing(mut self, forcing: Vec<f64>) -> Self {
        self.forcing = forcing;
        self
    }

    /// Oscillator in the local master numbering.
    pub fn to_oscillator(&self) -> Result<OscillatorSystem> {
        let local = |m: usize| self.masters.iter().position(|&x| x == m).expect("validated master");
        let mut sys = OscillatorSystem::linear(self.omega.clone(), self.zeta.clone(), self.forcing.clone())?;
        for (&(r, i, j, k), &g) in &self.gamma {
            sys.cubic.push((local(r), local(i), local(j), local(k), g));
        }
        if let Some(v) = self.nnm_velocity_coeff {
            sys.velocity.push((0, 0, 0, 0, v));
        }
        Ok(sys)
    }
}

/// Single-master normal-form model of mode `p`.
pub fn nnm_rom(
    p: usize,
    coeffs: &CouplingCoefficients,
    modes: &ModeSet,
    slaves: &[usize],
    zeta: f64,
) -> Result<(ReducedModel, NnmCoefficients)> {
    let beta = coeffs.require_beta(p, p, p, p)?;
    let parts: Vec<(usize, f64, f64)> = slaves
        .iter()
        .filter(|&&s| s != p)
        .map(|&s| Ok((s, coeffs.require_alpha(s, p, p)?, modes.omega[s])))
        .collect::<Result<_>>()?;
    let c = nnm_coefficients(modes.omega[p], beta, &parts)?;
    let mut gamma = GammaMap::new();
    gamma.insert((p, p, p, p), c.cubic);
    let mut rom = ReducedModel::from_gamma(&[p], modes, gamma, &[zeta])?;
    rom.nnm_velocity_coeff = Some(c.velocity);
    Ok((rom, c))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_slaves_leaves_beta_and_no_velocity_term() {
        let c = nnm_coefficients(10.0, 3.0, &[]).unwrap();
        assert_eq!((c.cubic, c.velocity), (3.0, 0.0));
    }

    #[test]
    fn resonance_is_rejected() {
        let err = nnm_coefficients(10.0, 3.0, &[(7, 1.0, 20.0)]).unwrap_err();
        assert!(matches!(err, Error::InternalResonance { mode: 7, .. }));
    }

    #[test]
    fn velocity_coefficient_scales_with_inverse_fourth_power() {
        let a = nnm_coefficients(1.0, 0.0, &[(1, 1.0, 50.0)]).unwrap().velocity;
        let b = nnm_coefficients(1.0, 0.0, &[(1, 1.0, 100.0)]).unwrap().velocity;
        assert!((a / b - 16.0).abs() < 0.05, "{}", a / b);
    }

    #[test]
    fn convergence_series_ends_at_gamma() {
        let s = CorrectionSpectrum {
            master: 0,
            beta: 10.0,
            entries: vec![
                CorrectionEntry { mode: 1, factor: 1.0, omega: 1.0 },
                CorrectionEntry { mode: 2, factor: 5.0, omega: 2.0 },
                CorrectionEntry { mode: 3, factor: 0.0, omega: 3.0 },
            ],
        };
        let c = s.convergence(SpectrumOrder::ByDecreasingFactor);
        assert_eq!(c, vec![10.0, 5.0, 4.0, 4.0]);
        assert_eq!(s.gamma(), 4.0);
        assert_eq!(s.modes_to_tolerance(SpectrumOrder::ByDecreasingFactor, 1e-3), Some(3));
        assert!((s.relevant_fraction(NEGLIGIBLE_FACTOR) - 2.0 / 3.0).abs() < 1e-15);
    }
}
