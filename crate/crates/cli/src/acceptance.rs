//! Acceptance suite: every criterion evaluated on the built-in structures,
//! reported as pass/fail with the measured values and the tolerance applied.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::time::Instant;

use romforge_core::fe::{generate_beam_mesh, NewtonOptions};
use romforge_core::hbm::{
    backbone, continue_frf, solve_periodic, linear_state, upper_branch_stiffness_margin, ContinuationOptions,
    OscillatorSystem,
};
use romforge_core::linalg::{norm, SymmetricSolver};
use romforge_core::modal::{solve_modes, ModeCount};
use romforge_core::mstep::{amplitude_validity_sweep, mstep_gamma, select_masters, ValidityRange};
use romforge_core::oracles::{constitutive_ratios, BeamSection, PureBendingField, BEAM_FIXTURES};
use romforge_core::reduction::{
    condensed_from_parts, correction_spectrum, nnm_coefficients, slave_modes, smd_condensed_cubic, smd_same,
    CorrectionSpectrum, SlaveSet, SpectrumOrder, NEGLIGIBLE_FACTOR,
};
use romforge_core::step::{oracle_tensors, step_pair, step_single, CouplingCoefficients, TensorBasis, ORACLE_BASIS_CAP};
use romforge_core::{ElementKind, FeModel, Material, ModeLabel, ModeSet};
use serde::{Deserialize, Serialize};

use crate::cases::{self, Case, STEEL_E, STEEL_RHO};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    /// Every criterion on the reference meshes.
    Quick,
    /// Adds a mesh-refinement check of the Poisson sweep.
    Full,
}

#[derive(Clone, Debug, Serialize)]
pub struct CriterionReport {
    pub id: u32,
    pub title: &'static str,
    pub passed: bool,
    pub measured: String,
    pub tolerance: String,
    pub seconds: f64,
}

impl CriterionReport {
    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} {} {} | measured: {} | required: {} | {:.1} s",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.title,
            self.measured,
            self.tolerance,
            self.seconds
        )
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AcceptanceReport {
    pub level: Level,
    pub criteria: Vec<CriterionReport>,
}

impl AcceptanceReport {
    pub fn passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }

    pub fn lines(&self) -> Vec<String> {
        self.criteria.iter().map(CriterionReport::line).collect()
    }
}

type R<T> = Result<T, String>;

fn err<E: Display>(e: E) -> String {
    e.to_string()
}

struct Outcome {
    passed: bool,
    measured: String,
    tolerance: String,
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn peak(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Full-spectrum study of one structure: modes, stiffness factorisation, and
/// single-mode STEP coefficients projected on every mode, per master.
struct Study {
    case: Case,
    modes: ModeSet,
    k: SymmetricSolver,
    masters: BTreeMap<usize, (f64, CouplingCoefficients, CorrectionSpectrum)>,
}

impl Study {
    fn new(case: Case) -> R<Self> {
        let modes = case.modes().map_err(err)?;
        let k = SymmetricSolver::new(&case.model.linear_stiffness()).map_err(err)?;
        Ok(Study { case, modes, k, masters: BTreeMap::new() })
    }

    fn bending(&self, n: usize) -> R<usize> {
        self.modes.nth_bending(n).map_err(err)
    }

    /// STEP amplitude with largest displacement h/20.
    fn lambda(&self, p: usize) -> f64 {
        0.05 * self.case.thickness / peak(&self.modes.shapes[p])
    }

    fn master(&mut self, p: usize) -> R<&(f64, CouplingCoefficients, CorrectionSpectrum)> {
        if !self.masters.contains_key(&p) {
            let all: Vec<usize> = (0..self.modes.len()).collect();
            let lambda = self.lambda(p);
            let c = step_single(&self.case.model, &self.modes, p, lambda, &all).map_err(err)?;
            let slaves = slave_modes(&self.modes, &[p], SlaveSet::AllOthers);
            let s = correction_spectrum(p, &c, &self.modes, &slaves).map_err(err)?;
            self.masters.insert(p, (lambda, c, s));
        }
        Ok(&self.masters[&p])
    }

    fn smd_gamma(&mut self, p: usize) -> R<f64> {
        let lambda = self.master(p)?.0;
        smd_condensed_cubic(&self.case.model, &self.k, &self.modes, p, lambda).map_err(err)
    }
}

struct Suite {
    level: Level,
    thick: Option<Study>,
    thick_nu0: Option<Study>,
    plate: Option<Study>,
    thin: BTreeMap<(u64, usize), R<f64>>,
}

const THICK_GAMMA_REFERENCE: f64 = 2.979e8;
const PAPER_COUNTS: (f64, f64) = (44.0, 68.0);
const POISSON_GRID: [f64; 5] = [0.0, 0.1, 0.2, 0.3, 0.4];
/// Modes ranked first by correction factor in the reference ordering (1-based).
const TOP_CORRECTION_MODES: [usize; 4] = [330, 328, 34, 167];

impl Suite {
    fn thick(&mut self) -> R<&mut Study> {
        if self.thick.is_none() {
            self.thick = Some(Study::new(cases::thick_beam(0.3).map_err(err)?)?);
        }
        Ok(self.thick.as_mut().expect("built"))
    }

    fn thick_nu0(&mut self) -> R<&mut Study> {
        if self.thick_nu0.is_none() {
            self.thick_nu0 = Some(Study::new(cases::thick_beam(0.0).map_err(err)?)?);
        }
        Ok(self.thick_nu0.as_mut().expect("built"))
    }

    fn plate(&mut self) -> R<&mut Study> {
        if self.plate.is_none() {
            self.plate = Some(Study::new(cases::circular_plate(cases::PLATE_REFINEMENT, 0.3).map_err(err)?)?);
        }
        Ok(self.plate.as_mut().expect("built"))
    }

    /// `beta^1_111` of the thin beam (SI), cached per Poisson ratio.
    fn thin_beta(&mut self, nu: f64, bending: usize) -> R<f64> {
        let key = (nu.to_bits(), bending);
        if !self.thin.contains_key(&key) {
            let v = thin_beam_beta(cases::thin_beam(nu).map_err(err)?, bending);
            self.thin.insert(key, v);
        }
        self.thin[&key].clone()
    }
}

fn thin_beam_beta(case: Case, bending: usize) -> R<f64> {
    let modes = case.modes().map_err(err)?;
    let p = modes.nth_bending(bending).map_err(err)?;
    let lambda = 0.05 * case.thickness / peak(&modes.shapes[p]);
    step_single(&case.model, &modes, p, lambda, &[p]).and_then(|c| c.require_beta(p, p, p, p)).map_err(err)
}

/// Run every criterion. Failures, including errors, are report entries.
pub fn acceptance_suite(level: Level) -> AcceptanceReport {
    let mut suite = Suite { level, thick: None, thick_nu0: None, plate: None, thin: BTreeMap::new() };
    type Check = fn(&mut Suite) -> R<Outcome>;
    let checks: [(u32, &'static str, Check); 13] = [
        (1, "STEP coefficients equal tensor-oracle contractions", c1_step_exactness),
        (2, "thin beam beta over analytic fixture (nu = 0)", c2_factor_two),
        (3, "beta(nu)/beta(0) follows the 3D constitutive law", c3_poisson),
        (4, "thick beam Gamma: condensation, SMD and M-STEP agree", c4_three_way),
        (5, "thick beam beta/Gamma and counts-to-tolerance", c5_overestimation),
        (6, "relevant-mode fractions and odd axial decoupling", c6_relevant_fraction),
        (7, "SMD modal decomposition and largest participations", c7_smd_decomposition),
        (8, "SMD condensed cubic equals full condensation", c8_smd_equivalence),
        (9, "normal-form cubic converges to condensation", c9_nnm_limit),
        (10, "M-STEP quality indicators and validity ranges", c10_mstep_quality),
        (11, "Green-Lagrange strain of the pure-bending field", c11_bending_oracle),
        (12, "harmonic balance limits and ROM ordering", c12_hbm),
        (13, "plate: three-way Gamma, coupled modes, overlap", c13_plate),
    ];
    let mut criteria = Vec::with_capacity(checks.len());
    for (id, title, check) in checks {
        let t = Instant::now();
        let outcome = check(&mut suite).unwrap_or_else(|e| Outcome {
            passed: false,
            measured: format!("error: {e}"),
            tolerance: "criterion could not be evaluated".into(),
        });
        criteria.push(CriterionReport {
            id,
            title,
            passed: outcome.passed,
            measured: outcome.measured,
            tolerance: outcome.tolerance,
            seconds: t.elapsed().as_secs_f64(),
        });
    }
    AcceptanceReport { level, criteria }
}

/// Largest deviation between STEP and oracle coefficients, relative to the
/// largest oracle coefficient of the same kind (alpha or beta).
fn step_oracle_error(model: &FeModel, pairs: &[(usize, usize)]) -> R<(f64, usize)> {
    let modes = solve_modes(&model.linear_stiffness(), &model.mass_matrix(), ModeCount::All).map_err(err)?;
    let n = modes.len();
    let nt = oracle_tensors(model, TensorBasis::all_dofs(model), ORACLE_BASIS_CAP).map_err(err)?;
    let coords: Vec<Vec<f64>> = modes.shapes.iter().map(|s| nt.coordinates(s)).collect::<Result<_, _>>().map_err(err)?;
    let (lo, hi) = model.mesh().bounding_box();
    let size = (0..3).map(|d| hi[d] - lo[d]).fold(0.0, f64::max);
    let lambda = |p: usize| 1e-2 * size / peak(&modes.shapes[p]);
    let all: Vec<usize> = (0..n).collect();
    let project = |v: &[f64], mult: f64| -> Vec<f64> {
        (0..n).map(|k| mult * romforge_core::linalg::dot(&modes.shapes[k], v) / modes.modal_masses[k]).collect()
    };
    let mut alpha: Vec<(f64, f64)> = Vec::new();
    let mut beta: Vec<(f64, f64)> = Vec::new();
    let mut count = 0;
    for p in 0..n {
        let c = step_single(model, &modes, p, lambda(p), &all).map_err(err)?;
        let a = project(&nt.apply_quadratic(&coords[p], &coords[p]), 1.0);
        let b = project(&nt.apply_cubic(&coords[p], &coords[p], &coords[p]), 1.0);
        for k in 0..n {
            alpha.push((c.require_alpha(k, p, p).map_err(err)?, a[k]));
            beta.push((c.require_beta(k, p, p, p).map_err(err)?, b[k]));
        }
        count += 2 * n;
    }
    for &(p, r) in pairs {
        let c = step_pair(model, &modes, p, r, (lambda(p), lambda(r)), &all).map_err(err)?;
        let a = project(&nt.apply_quadratic(&coords[p], &coords[r]), 2.0);
        let bppr = project(&nt.apply_cubic(&coords[p], &coords[p], &coords[r]), 3.0);
        let bprr = project(&nt.apply_cubic(&coords[p], &coords[r], &coords[r]), 3.0);
        for k in 0..n {
            alpha.push((c.require_alpha(k, p, r).map_err(err)?, a[k]));
            beta.push((c.require_beta(k, p, p, r).map_err(err)?, bppr[k]));
            beta.push((c.require_beta(k, p, r, r).map_err(err)?, bprr[k]));
        }
        count += 3 * n;
    }
    let worst = |v: &[(f64, f64)]| {
        let scale = v.iter().fold(0.0f64, |m, x| m.max(x.1.abs()));
        v.iter().fold(0.0f64, |m, x| m.max((x.0 - x.1).abs())) / scale
    };
    Ok((worst(&alpha).max(worst(&beta)), count))
}

fn c1_step_exactness(_: &mut Suite) -> R<Outcome> {
    let t = Instant::now();
    let mat = Material::new(STEEL_E, 0.3, STEEL_RHO).map_err(err)?;
    let hex8 = FeModel::new(generate_beam_mesh(0.2, 0.05, 0.1, 1, 1, 1, ElementKind::Hex8, false).map_err(err)?, mat)
        .map_err(err)?;
    let pairs8: Vec<(usize, usize)> = (0..hex8.ndof()).flat_map(|p| (p + 1..hex8.ndof()).map(move |r| (p, r))).collect();
    let (e8, n8) = step_oracle_error(&hex8, &pairs8)?;
    let mut strip = generate_beam_mesh(0.2, 0.05, 0.1, 2, 1, 1, ElementKind::Hex20, false).map_err(err)?;
    strip.dirichlet = strip.node_sets["clamp_left"].iter().flat_map(|&n| (0..3).map(move |d| (n, d))).collect();
    let strip = FeModel::new(strip, mat).map_err(err)?;
    let pairs20: Vec<(usize, usize)> = (0..8).flat_map(|p| (p + 1..8).map(move |r| (p, r))).collect();
    let (e20, n20) = step_oracle_error(&strip, &pairs20)?;
    let secs = t.elapsed().as_secs_f64();
    Ok(Outcome {
        passed: e8 <= 1e-9 && e20 <= 1e-9 && secs < 10.0,
        measured: format!(
            "HEX8 ({} dofs, {n8} coefficients) {e8:.2e}; HEX20 strip ({} dofs, {n20} coefficients) {e20:.2e}; {secs:.1} s",
            hex8.ndof(),
            strip.ndof()
        ),
        tolerance: "max |STEP - oracle| / max |oracle| <= 1e-9 per coefficient kind, < 10 s".into(),
    })
}

fn thin_section() -> BeamSection {
    BeamSection { length: 1.0, width: 0.05, height: 0.001, young_modulus: STEEL_E, density: STEEL_RHO }
}

fn c2_factor_two(s: &mut Suite) -> R<Outcome> {
    let fac = thin_section().cubic_nondim_factor();
    let r1 = s.thin_beta(0.0, 0)? * fac / BEAM_FIXTURES.beta1_111;
    let r2 = s.thin_beta(0.0, 1)? * fac / BEAM_FIXTURES.beta2_222;
    Ok(Outcome {
        passed: (r1 - 2.0).abs() <= 0.05 && (r2 - 2.0).abs() <= 0.05,
        measured: format!("mode 1: {r1:.4}, mode 2: {r2:.4}"),
        tolerance: "2.00 +- 0.05".into(),
    })
}

fn c3_poisson(s: &mut Suite) -> R<Outcome> {
    let b0 = s.thin_beta(0.0, 0)?;
    let r20 = constitutive_ratios(0.0).map_err(err)?.1;
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for nu in POISSON_GRID {
        let ratio = s.thin_beta(nu, 0)? / b0;
        let law = constitutive_ratios(nu).map_err(err)?.1 / r20;
        worst = worst.max(rel(ratio, law));
        parts.push(format!("nu={nu}: {ratio:.4} vs {law:.4} ({:.2}%)", 100.0 * rel(ratio, law)));
    }
    let mut measured = parts.join("; ");
    if s.level == Level::Full {
        // same sweep with twice the elements through the thickness and across the width
        let fine = |nu: f64| -> R<f64> {
            let mut case = cases::thin_beam(nu).map_err(err)?;
            let mesh = generate_beam_mesh(1.0, 0.05, 0.001, 100, 4, 8, ElementKind::Hex20, true).map_err(err)?;
            case.model = FeModel::new(mesh, case.model.material().clone()).map_err(err)?;
            thin_beam_beta(case, 0)
        };
        let f0 = fine(0.0)?;
        let fine_parts: Vec<String> = [0.3, 0.4]
            .iter()
            .map(|&nu| fine(nu).map(|b| format!("nu={nu}: {:.4}", b / f0)))
            .collect::<R<_>>()?;
        measured.push_str(&format!("; refined 100x4x8 mesh: {}", fine_parts.join(", ")));
    }
    Ok(Outcome { passed: worst <= 0.01, measured, tolerance: "within 1% of rho2(nu)/rho2(0) for every nu".into() })
}

fn c4_three_way(s: &mut Suite) -> R<Outcome> {
    let t = Instant::now();
    let st = s.thick()?;
    let p = st.bending(0)?;
    let ga = st.master(p)?.2.gamma();
    let gb = st.smd_gamma(p)?;
    let masters = select_masters(&st.case.model, "midline", 1).map_err(err)?;
    let lm = 0.5 * st.case.thickness / peak(&st.modes.shapes[p]);
    let r = mstep_gamma(&st.case.model, &st.modes, p, lm, &masters, &[p], &NewtonOptions::default()).map_err(err)?;
    let gc = r.gamma_of(p).ok_or("no M-STEP coefficient")?;
    let (ab, ac, bc) = (rel(gb, ga), rel(gc, ga), rel(gc, gb));
    let abs = rel(ga, THICK_GAMMA_REFERENCE);
    let secs = t.elapsed().as_secs_f64();
    Ok(Outcome {
        passed: ab <= 5e-4 && ac <= 5e-3 && bc <= 5e-3 && abs <= 0.02 && secs < 300.0,
        measured: format!(
            "{} dofs; condensation {ga:.5e}, SMD {gb:.5e}, M-STEP {gc:.5e}; a-b {ab:.1e}, a-c {ac:.1e}, b-c {bc:.1e}; vs 2.979e8 {abs:.1e}; {secs:.1} s",
            st.case.model.ndof()
        ),
        tolerance: "pairwise <= 0.5%, condensation-SMD <= 0.05%, absolute <= 2%, < 300 s".into(),
    })
}

fn c5_overestimation(s: &mut Suite) -> R<Outcome> {
    let st = s.thick()?;
    let p = st.bending(0)?;
    let sp = &st.master(p)?.2;
    let ratio = sp.beta / sp.gamma();
    let n1 = sp.modes_to_tolerance(SpectrumOrder::ByDecreasingFactor, 1e-2).ok_or("1% never reached")?;
    let n01 = sp.modes_to_tolerance(SpectrumOrder::ByDecreasingFactor, 1e-3).ok_or("0.1% never reached")?;
    let ok_counts = rel(n1 as f64, PAPER_COUNTS.0) <= 0.2 && rel(n01 as f64, PAPER_COUNTS.1) <= 0.2;
    Ok(Outcome {
        passed: (ratio - 5.5).abs() <= 0.3 && ok_counts,
        measured: format!("beta/Gamma {ratio:.3}; {n1} modes to 1%, {n01} modes to 0.1%"),
        tolerance: "5.5 +- 0.3; counts within 20% of 44 and 68".into(),
    })
}

/// Non-bending modes whose midline motion is axial and symmetric about midspan
/// (first, third, ... axial modes of a clamped-clamped beam).
fn odd_axial_modes(case: &Case, modes: &ModeSet) -> R<Vec<usize>> {
    let mesh = case.model.mesh();
    let dofs = case.model.dofs();
    let mid = mesh.node_set("midline").map_err(err)?;
    let (lo, hi) = mesh.bounding_box();
    let mirror: Vec<usize> = mid
        .iter()
        .map(|&n| {
            let x = mesh.nodes[n];
            mesh.nearest_node([lo[0] + hi[0] - x[0], x[1], x[2]])
        })
        .collect();
    let mut out = Vec::new();
    for (s, shape) in modes.shapes.iter().enumerate() {
        if modes.labels[s] != ModeLabel::NonBending {
            continue;
        }
        let u = dofs.expand(shape);
        let total: f64 = u.iter().map(|v| v.iter().map(|c| c * c).sum::<f64>()).sum::<f64>() / u.len() as f64;
        let on_mid: f64 = mid.iter().map(|&n| u[n].iter().map(|c| c * c).sum::<f64>()).sum::<f64>() / mid.len() as f64;
        let axial: f64 = mid.iter().map(|&n| u[n][0] * u[n][0]).sum::<f64>() / mid.len() as f64;
        if on_mid < 0.5 * total || axial < 0.9 * on_mid {
            continue;
        }
        let (mut sym, mut anti) = (0.0, 0.0);
        for (&n, &m) in mid.iter().zip(&mirror) {
            sym += (u[n][0] + u[m][0]).powi(2);
            anti += (u[n][0] - u[m][0]).powi(2);
        }
        if anti < 1e-2 * sym {
            out.push(s);
        }
    }
    Ok(out)
}

fn fraction_and_axial(st: &mut Study) -> R<(f64, usize, f64)> {
    let p = st.bending(0)?;
    let axial = odd_axial_modes(&st.case, &st.modes)?;
    let sp = &st.master(p)?.2;
    let frac = sp.relevant_fraction(NEGLIGIBLE_FACTOR);
    let worst = sp
        .entries
        .iter()
        .filter(|e| axial.contains(&e.mode))
        .map(|e| sp.normalized(e))
        .fold(0.0f64, f64::max);
    Ok((frac, axial.len(), worst))
}

fn c6_relevant_fraction(s: &mut Suite) -> R<Outcome> {
    let (f3, n3, w3) = fraction_and_axial(s.thick()?)?;
    let (f0, n0, w0) = fraction_and_axial(s.thick_nu0()?)?;
    let ok3 = (f3 - 0.20).abs() <= 0.05;
    let ok0 = (f0 - 0.05).abs() <= 0.05;
    let ok_axial = n3 > 0 && n0 > 0 && w3 <= NEGLIGIBLE_FACTOR && w0 <= NEGLIGIBLE_FACTOR;
    Ok(Outcome {
        passed: ok3 && ok0 && ok_axial,
        measured: format!(
            "nu=0.3: {:.1}%, nu=0: {:.1}%; odd axial modes {n3}/{n0}, largest normalised factor {:.1e}/{:.1e}",
            100.0 * f3,
            100.0 * f0,
            w3,
            w0
        ),
        tolerance: "20% +- 5 pts (nu=0.3), 5% +- 5 pts (nu=0), odd axial factors <= 1e-15".into(),
    })
}

fn c7_smd_decomposition(s: &mut Suite) -> R<Outcome> {
    let st = s.thick()?;
    let p = st.bending(0)?;
    let (lambda, c, _) = st.master(p)?.clone();
    let theta = smd_same(&st.case.model, &st.k, &st.modes, p, lambda).map_err(err)?.vector;
    let mut rest = theta.clone();
    let mut parts = Vec::new();
    for k in 0..st.modes.len() {
        let w = 2.0 * c.require_alpha(k, p, p).map_err(err)? / st.modes.omega[k].powi(2);
        for (r, v) in rest.iter_mut().zip(&st.modes.shapes[k]) {
            *r += w * v;
        }
        if k != p {
            parts.push((k, w.abs()));
        }
    }
    let residual = norm(&rest) / norm(&theta);
    parts.sort_by(|a, b| b.1.total_cmp(&a.1));
    let top: Vec<usize> = parts.iter().take(4).map(|x| x.0).collect();
    let omega = &st.modes.omega;
    let expected: Vec<usize> = TOP_CORRECTION_MODES.iter().map(|m| m - 1).collect();
    let matches = |m: usize| expected.iter().any(|&e| e == m || rel(omega[m], omega[e]) < 1e-6);
    let ok_set = top.iter().all(|&m| matches(m));
    Ok(Outcome {
        passed: residual <= 1e-8 && ok_set,
        measured: format!(
            "residual {residual:.2e}; largest |2 alpha/w^2| at modes {:?}",
            top.iter().map(|m| m + 1).collect::<Vec<_>>()
        ),
        tolerance: format!("residual <= 1e-8; top four = {TOP_CORRECTION_MODES:?} up to degenerate swaps"),
    })
}

fn smd_vs_condensation(st: &mut Study, bending: usize) -> R<(String, f64)> {
    let p = st.bending(bending)?;
    let g = st.master(p)?.2.gamma();
    Ok((st.case.name.clone(), rel(st.smd_gamma(p)?, g)))
}

fn c8_smd_equivalence(s: &mut Suite) -> R<Outcome> {
    let errs = [smd_vs_condensation(s.thick()?, 0)?, smd_vs_condensation(s.plate()?, 1)?];
    Ok(Outcome {
        passed: errs.iter().all(|e| e.1 <= 1e-6),
        measured: errs.iter().map(|(n, e)| format!("{n}: {e:.2e}")).collect::<Vec<_>>().join(", "),
        tolerance: "|SMD - condensation| / |Gamma| <= 1e-6".into(),
    })
}

fn c9_nnm_limit(_: &mut Suite) -> R<Outcome> {
    // unit master frequency, static correction 2 alpha^2 / w_s^2 held at 1
    let (wp, beta, correction) = (1.0, 3.0, 1.0);
    let mut errs = Vec::new();
    for ratio in [10.0, 100.0] {
        let ws = ratio * wp;
        let alpha = ws * (correction / 2.0f64).sqrt();
        let parts = [(1usize, alpha, ws)];
        let nnm = nnm_coefficients(wp, beta, &parts).map_err(err)?.cubic;
        let cond = condensed_from_parts(beta, &parts);
        errs.push((nnm - cond).abs());
    }
    let exponent = (errs[0] / errs[1]).log10();
    Ok(Outcome {
        passed: (exponent - 2.0).abs() <= 0.1,
        measured: format!("errors {:.3e} (w_s/w_p=10), {:.3e} (100); exponent {exponent:.3}", errs[0], errs[1]),
        tolerance: "exponent 2 +- 0.1".into(),
    })
}

fn validity_ratios() -> Vec<f64> {
    (0..=32).map(|i| 10f64.powf(-3.0 + 4.0 * i as f64 / 32.0)).collect()
}

fn c10_mstep_quality(s: &mut Suite) -> R<Outcome> {
    let st = s.thick()?;
    let p = st.bending(0)?;
    let opts = NewtonOptions::default();
    let lm = 0.5 * st.case.thickness / peak(&st.modes.shapes[p]);
    let quality = |set: &str| -> R<(f64, f64)> {
        let sel = select_masters(&st.case.model, set, 1).map_err(err)?;
        let r = mstep_gamma(&st.case.model, &st.modes, p, lm, &sel, &[p], &opts).map_err(err)?;
        Ok((r.e1.iter().find(|e| e.0 == p).ok_or("no e1")?.1, r.e2))
    };
    let (e1n, e2n) = quality("midline")?;
    let (e1l, e2l) = quality("lateral_line")?;
    let ok_quality = e1n.abs() <= 1e-3 && e2n <= 1e-4 && e1l.abs() >= 1e-2 && e2l >= 1e-2;
    let sel = select_masters(&st.case.model, "midline", 1).map_err(err)?;
    let mut ranges: Vec<Option<ValidityRange>> = Vec::new();
    for n in 0..3 {
        let q = st.bending(n)?;
        let reference = st.master(q)?.2.gamma();
        let r = amplitude_validity_sweep(
            &st.case.model,
            &st.modes,
            q,
            &validity_ratios(),
            st.case.thickness,
            &sel,
            reference,
            &opts,
        );
        ranges.push(r.ok());
    }
    let contains = ranges[0].as_ref().is_some_and(|r| r.contains(0.5));
    let widths: Vec<f64> = ranges.iter().map(|r| r.as_ref().map_or(0.0, ValidityRange::log_width)).collect();
    let shrinking = widths.windows(2).all(|w| w[1] <= w[0]);
    let fmt = |r: &Option<ValidityRange>| {
        r.as_ref().map_or("empty".into(), |r| format!("[{:.3}, {:.3}]", r.lower, r.upper))
    };
    Ok(Outcome {
        passed: ok_quality && contains && shrinking,
        measured: format!(
            "midline e1 {e1n:.2e} e2 {e2n:.2e}; lateral e1 {e1l:.2e} e2 {e2l:.2e}; ranges (x h) {}, {}, {}",
            fmt(&ranges[0]),
            fmt(&ranges[1]),
            fmt(&ranges[2])
        ),
        tolerance: "midline |e1| <= 1e-3, e2 <= 1e-4; lateral |e1|, e2 >= 1e-2; mode-1 range holds h/2; widths non-increasing".into(),
    })
}

fn c11_bending_oracle(_: &mut Suite) -> R<Outcome> {
    let mesh = generate_beam_mesh(0.1, 0.02, 0.03, 1, 1, 1, ElementKind::Hex20, false).map_err(err)?;
    let mut worst = 0.0f64;
    let mut gamma3_at_zero = 0.0f64;
    for nu in [0.0, 0.3] {
        let model = FeModel::new(mesh.clone(), Material::new(STEEL_E, nu, STEEL_RHO).map_err(err)?).map_err(err)?;
        let alpha = 2.0;
        let field = PureBendingField::new(alpha, nu);
        let u: Vec<[f64; 3]> = mesh.nodes.iter().map(|&x| field.displacement(x)).collect();
        let fe = model.green_lagrange_at_quadrature_points(0, &u);
        for (q, e) in model.quadrature_points(0).iter().zip(&fe) {
            let parts = field.strain_parts(*q);
            let exact = parts.total();
            for i in 0..3 {
                for j in 0..3 {
                    worst = worst.max((e[i][j] - exact[i][j]).abs() / (alpha * alpha));
                    if nu == 0.0 {
                        gamma3_at_zero = gamma3_at_zero.max(parts.gamma3[i][j].abs());
                    }
                }
            }
        }
    }
    Ok(Outcome {
        passed: worst <= 1e-12 && gamma3_at_zero == 0.0,
        measured: format!("max |E_fe - E_exact| / alpha^2 = {worst:.2e}; max |gamma3| at nu=0 = {gamma3_at_zero:e}"),
        tolerance: "<= 1e-12; gamma3 identically zero at nu = 0".into(),
    })
}

fn c12_hbm(s: &mut Suite) -> R<Outcome> {
    let opts = ContinuationOptions::default();
    // linear limit: every branch point against |H|, plus the solve at resonance
    let (w, zeta, f) = (1.0, 0.01, 1.0);
    let lin = OscillatorSystem::linear(vec![w], vec![zeta], vec![f]).map_err(err)?;
    let branch = continue_frf(&lin, (0.5, 1.5), &opts).map_err(err)?;
    let exact = |om: f64| f / ((w * w - om * om).powi(2) + (2.0 * zeta * w * om).powi(2)).sqrt();
    let frf_err = branch.points.iter().map(|p| rel(p.amplitude, exact(p.omega))).fold(0.0, f64::max);
    let x0 = linear_state(&lin, w, opts.harmonics);
    let at_w = solve_periodic(&lin, w, opts.harmonics, Some(&x0), 1e-13, 20).map_err(err)?;
    let amp_w = romforge_core::hbm::probe_amplitude(&at_w, opts.harmonics, &[1.0]);
    let res_err = rel(amp_w, f / (2.0 * zeta * w * w));
    let peak_err = frf_err.max(res_err);
    // Duffing backbone against first-order perturbation of the frequency shift
    let gamma = 1.0;
    let duff = OscillatorSystem::duffing(w, 0.0, gamma, 0.0).map_err(err)?;
    let amps: Vec<f64> = (1..=10).map(|i| 0.01 * i as f64).collect();
    let bb = backbone(&duff, 0, &amps, &opts).map_err(err)?;
    let bb_err = bb
        .points
        .iter()
        .map(|p| {
            let a = p.coeffs[1];
            let shift = 3.0 * gamma * a * a / (8.0 * w);
            rel(p.omega - w, shift)
        })
        .fold(0.0, f64::max);
    // forced hardening response with a fold pair
    let forced = OscillatorSystem::duffing(w, 0.01, 1.0, 0.02).map_err(err)?;
    let fb = continue_frf(&forced, (0.5, 2.0), &opts).map_err(err)?;
    let folds_ok = fb.fold_count() >= 2 && fb.truncated.is_none();
    // thick beam ROM with a 9-mode partial Gamma against the condensed one
    let st = s.thick()?;
    let p = st.bending(0)?;
    let sp = st.master(p)?.2.clone();
    let g_full = sp.gamma();
    let g9 = sp.convergence(SpectrumOrder::ByDecreasingFactor)[9];
    let wp = st.modes.omega[p];
    let probe = peak(&st.modes.shapes[p]);
    let force = 2.0 * 0.005 * wp * wp * st.case.thickness / probe;
    let rom = |g: f64| -> R<OscillatorSystem> {
        let mut sys = OscillatorSystem::linear(vec![wp], vec![0.005], vec![force]).map_err(err)?;
        sys.cubic.push((0, 0, 0, 0, g));
        Ok(sys)
    };
    let ropts = ContinuationOptions { probe: Some(vec![probe]), ..opts.clone() };
    let full = continue_frf(&rom(g_full)?, (0.8 * wp, 2.0 * wp), &ropts).map_err(err)?;
    let part = continue_frf(&rom(g9)?, (0.8 * wp, 2.0 * wp), &ropts).map_err(err)?;
    let margin = upper_branch_stiffness_margin(&part, &full).map_err(err)?;
    Ok(Outcome {
        passed: peak_err <= 1e-6 && bb_err <= 0.01 && folds_ok && margin > 0.0,
        measured: format!(
            "linear FRF {peak_err:.1e}; backbone shift {:.2}%; folds {} ({}); 9-mode ROM margin {:.2}% (Gamma9/Gamma {:.3})",
            100.0 * bb_err,
            fb.fold_count(),
            fb.truncated.as_deref().unwrap_or("not truncated"),
            100.0 * margin,
            g9 / g_full
        ),
        tolerance: "FRF <= 1e-6; backbone <= 1%; >= 2 folds, no truncation; partial ROM strictly stiffer".into(),
    })
}

/// Share of the motion that varies through the thickness: 0 for a pure
/// in-plane (membrane) mode, near 1 for thickness-dominated modes.
fn thickness_variation(case: &Case, shape: &[f64]) -> R<f64> {
    let mesh = case.model.mesh();
    let u = case.model.dofs().expand(shape);
    let h = case.thickness;
    let (mut var, mut tot) = (0.0, 0.0);
    for &n in mesh.node_set("midsurface").map_err(err)? {
        let x = mesh.nodes[n];
        for z in [0.5 * h, -0.5 * h] {
            let f = mesh.nearest_node([x[0], x[1], z]);
            var += (0..3).map(|d| (u[f][d] - u[n][d]).powi(2)).sum::<f64>();
            tot += (0..3).map(|d| u[f][d].powi(2)).sum::<f64>();
        }
    }
    Ok(if tot > 0.0 { var / tot } else { 0.0 })
}

fn c13_plate(s: &mut Suite) -> R<Outcome> {
    let st = s.plate()?;
    let p0 = st.bending(0)?;
    let p = st.bending(1)?;
    let ga = st.master(p)?.2.gamma();
    let gb = st.smd_gamma(p)?;
    let sel = select_masters(&st.case.model, "midsurface", 2).map_err(err)?;
    let lm = 0.5 * st.case.thickness / peak(&st.modes.shapes[p]);
    let r = mstep_gamma(&st.case.model, &st.modes, p, lm, &sel, &[p], &NewtonOptions::default()).map_err(err)?;
    let gc = r.gamma_of(p).ok_or("no M-STEP coefficient")?;
    let worst = rel(gb, ga).max(rel(gc, ga)).max(rel(gc, gb));
    let top9: Vec<usize> =
        st.master(p)?.2.ordered(SpectrumOrder::ByDecreasingFactor).iter().take(9).map(|e| e.mode).collect();
    let variation: Vec<f64> = top9.iter().map(|&m| thickness_variation(&st.case, &st.modes.shapes[m])).collect::<R<_>>()?;
    let in_plane = variation.iter().filter(|&&v| v < 0.1).count();
    let thick_dominated = variation.iter().filter(|&&v| v > 0.5).count();
    let relevant = |sp: &CorrectionSpectrum| -> Vec<usize> {
        sp.relevant(NEGLIGIBLE_FACTOR).iter().map(|e| e.mode).collect()
    };
    let set_b = relevant(&st.master(p)?.2);
    let set_a = relevant(&st.master(p0)?.2);
    let common = set_a.iter().filter(|m| set_b.contains(m)).count();
    let overlap = common as f64 / set_a.len().min(set_b.len()).max(1) as f64;
    Ok(Outcome {
        passed: worst <= 5e-3 && in_plane <= 2 && in_plane + thick_dominated == 9 && overlap >= 0.9,
        measured: format!(
            "{} dofs; Gamma {ga:.5e}/{gb:.5e}/{gc:.5e}, worst pair {worst:.1e}; top-9 in-plane {in_plane}, thickness-dominated {thick_dominated}; overlap {:.1}% ({common} of {}/{})",
            st.case.model.ndof(),
            100.0 * overlap,
            set_a.len(),
            set_b.len()
        ),
        tolerance: "pairwise <= 0.5%; <= 2 in-plane, rest thickness-dominated; overlap >= 90%".into(),
    })
}
