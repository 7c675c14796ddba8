//! `run_case`: executes a manifest's stages and writes the artifact bundle.

use std::collections::BTreeMap;
use std::path::PathBuf;

use rayon::prelude::*;
use romforge_core::fe::NewtonOptions;
use romforge_core::hbm::{backbone, continue_frf, ContinuationOptions, FrfBranch, OscillatorSystem};
use romforge_core::linalg::SymmetricSolver;
use romforge_core::modal::{orthonormality_defects, ModeCount};
use romforge_core::mstep::{validity_points, validity_range, mstep_gamma, mstep_gamma_mixed, select_masters, MasterSelection};
use romforge_core::oracles::constitutive_ratios;
use romforge_core::reduction::{
    condensed_cubic, correction_spectrum, nnm_rom, slave_modes, smd_condensed_cubic, smd_mixed_gamma, smd_same,
    CorrectionSpectrum, GammaMap, ReducedModel, SlaveSet,
};
use romforge_core::step::{step_single, step_subset, CouplingCoefficients};
use romforge_core::{Error, ModeSet};
use serde::Serialize;
use serde_json::json;

use crate::artifacts::{num, Artifacts};
use crate::cases::Case;
use crate::manifest::{ManifestError, RunManifest, Stage};
use crate::report::spectrum_report;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error("stage `{stage}` failed: {message}")]
    Stage { stage: Stage, message: String },
    #[error("cannot build case: {0}")]
    Case(Error),
    #[error("cannot write artifacts: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub hash: String,
    pub files: Vec<PathBuf>,
}

/// Candidate M-STEP master sets for the e1/e2 table.
pub const CANONICAL_SETS: [&str; 7] =
    ["midline", "upper_line", "lateral_line", "upper_lateral_line", "midsurface", "top", "bottom"];

type StageResult = std::result::Result<(), StageError>;

#[derive(Debug)]
enum StageError {
    Core(Error),
    Io(std::io::Error),
    Msg(String),
}

impl From<Error> for StageError {
    fn from(e: Error) -> Self {
        StageError::Core(e)
    }
}

impl From<std::io::Error> for StageError {
    fn from(e: std::io::Error) -> Self {
        StageError::Io(e)
    }
}

impl std::fmt::Display for StageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StageError::Core(e) => e.fmt(f),
            StageError::Io(e) => e.fmt(f),
            StageError::Msg(m) => f.write_str(m),
        }
    }
}

fn missing(what: &str) -> StageError {
    StageError::Msg(format!("{what} not available"))
}

struct Run<'a> {
    manifest: &'a RunManifest,
    case: Case,
    out: Artifacts,
    modes: Option<ModeSet>,
    masters: Vec<usize>,
    coeffs: Option<CouplingCoefficients>,
    spectra: Vec<CorrectionSpectrum>,
    gammas: BTreeMap<Stage, GammaMap>,
    nnm: Option<ReducedModel>,
    stiffness: Option<SymmetricSolver>,
}

/// Execute `manifest` and write its artifacts. An empty pipeline writes the
/// manifest echo only.
pub fn run_case(manifest: &RunManifest) -> Result<RunSummary, RunError> {
    manifest.validate()?;
    let hash = manifest.hash();
    let mut out = Artifacts::create(&manifest.output_dir, &hash)?;
    out.json("manifest.json", manifest)?;
    if manifest.pipeline.is_empty() {
        return Ok(RunSummary { hash, files: out.files().to_vec() });
    }
    let mut case = manifest.case.build(None).map_err(RunError::Case)?;
    if let Some(n) = manifest.parameters.mode_count {
        case = case.with_mode_count(ModeCount::Lowest(n));
    }
    let mut run = Run {
        manifest,
        case,
        out,
        modes: None,
        masters: Vec::new(),
        coeffs: None,
        spectra: Vec::new(),
        gammas: BTreeMap::new(),
        nnm: None,
        stiffness: None,
    };
    for &stage in &manifest.pipeline {
        run.stage(stage).map_err(|e| RunError::Stage { stage, message: e.to_string() })?;
    }
    run.comparison()?;
    Ok(RunSummary { hash, files: run.out.files().to_vec() })
}

fn gamma_rows(g: &GammaMap) -> Vec<[String; 5]> {
    g.iter()
        .map(|(&(r, i, j, k), v)| [(r + 1).to_string(), (i + 1).to_string(), (j + 1).to_string(), (k + 1).to_string(), num(*v)])
        .collect()
}

const GAMMA_HEADER: [&str; 5] = ["r", "i", "j", "k", "gamma"];

fn peak(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

impl Run<'_> {
    fn modes(&self) -> Result<&ModeSet, StageError> {
        self.modes.as_ref().ok_or_else(|| missing("modes"))
    }

    fn params(&self) -> &crate::manifest::Parameters {
        &self.manifest.parameters
    }

    fn stage(&mut self, stage: Stage) -> StageResult {
        match stage {
            Stage::Mesh => self.mesh(),
            Stage::Modal => self.modal(),
            Stage::Step => self.step(),
            Stage::Condense => self.condense(),
            Stage::Smd => self.smd(),
            Stage::Nnm => self.nnm(),
            Stage::Mstep => self.mstep(),
            Stage::Frf => self.frf(),
            Stage::Backbone => self.backbone(),
        }
    }

    fn mesh(&mut self) -> StageResult {
        let mesh = self.case.model.mesh();
        let sets: BTreeMap<&str, usize> = mesh.node_sets.iter().map(|(k, v)| (k.as_str(), v.len())).collect();
        let summary = json!({
            "case": self.case.name,
            "element": format!("{:?}", mesh.kind),
            "nodes": mesh.nodes.len(),
            "elements": mesh.elements.len(),
            "free_dofs": self.case.model.ndof(),
            "volume": self.case.model.volume(),
            "node_sets": sets,
        });
        self.out.json("mesh_summary.json", &summary)?;
        self.out.json("mesh.json", mesh)?;
        Ok(())
    }

    fn modal(&mut self) -> StageResult {
        let modes = self.case.modes()?;
        self.masters = self
            .params()
            .bending_modes
            .iter()
            .map(|&n| modes.nth_bending(n - 1))
            .collect::<romforge_core::Result<_>>()?;
        let rows = (0..modes.len()).map(|k| {
            [
                (k + 1).to_string(),
                num(modes.frequency_hz(k)),
                num(modes.omega[k]),
                format!("{:?}", modes.labels[k]).to_lowercase(),
                num(modes.ratios[k]),
            ]
        });
        self.out.csv("modes.csv", &["mode", "frequency_hz", "omega", "label", "transverse_ratio"], rows)?;
        let (dk, dm) =
            orthonormality_defects(&modes, &self.case.model.linear_stiffness(), &self.case.model.mass_matrix());
        let summary = json!({
            "modes": modes.len(),
            "free_dofs": self.case.model.ndof(),
            "bending_modes": modes.bending_indices().iter().map(|b| b + 1).collect::<Vec<_>>(),
            "masters": self.masters.iter().map(|m| m + 1).collect::<Vec<_>>(),
            "stiffness_orthogonality_defect": dk,
            "mass_orthonormality_defect": dm,
        });
        self.out.json("modal.json", &summary)?;
        self.modes = Some(modes);
        Ok(())
    }

    fn step_lambda(&self, p: usize) -> Result<f64, StageError> {
        Ok(self.params().step_amplitude_ratio * self.case.thickness / peak(&self.modes()?.shapes[p]))
    }

    fn step(&mut self) -> StageResult {
        let modes = self.modes()?;
        let lambdas: Vec<f64> = self.masters.iter().map(|&p| self.step_lambda(p)).collect::<Result<_, _>>()?;
        let all: Vec<usize> = (0..modes.len()).collect();
        let coeffs = step_subset(&self.case.model, modes, &self.masters, &lambdas, &all)?;
        let alpha = coeffs.alpha_entries().into_iter().map(|(k, i, j, v)| {
            [(k + 1).to_string(), (i + 1).to_string(), (j + 1).to_string(), num(v)]
        });
        self.out.csv("alpha.csv", &["k", "i", "j", "alpha"], alpha)?;
        let beta = coeffs.beta_entries().into_iter().map(|(k, i, j, l, v)| {
            [(k + 1).to_string(), (i + 1).to_string(), (j + 1).to_string(), (l + 1).to_string(), num(v)]
        });
        self.out.csv("beta.csv", &["k", "i", "j", "l", "beta"], beta)?;
        let summary = json!({
            "masters": coeffs.subset.iter().map(|m| m + 1).collect::<Vec<_>>(),
            "amplitudes": coeffs.amplitudes,
            "projection_modes": coeffs.projection.len(),
            "evaluations": coeffs.evaluations,
        });
        self.out.json("step.json", &summary)?;
        self.coeffs = Some(coeffs);
        if !self.params().poisson_sweep.is_empty() {
            self.poisson_sweep()?;
        }
        Ok(())
    }

    /// `beta^p_ppp` of the first master over Poisson's ratio, against the
    /// plane-stress and 3D constitutive laws.
    fn poisson_sweep(&mut self) -> StageResult {
        let bending = self.params().bending_modes[0] - 1;
        let ratio = self.params().step_amplitude_ratio;
        let mut grid = self.params().poisson_sweep.clone();
        if !grid.contains(&0.0) {
            grid.push(0.0);
        }
        grid.sort_by(f64::total_cmp);
        let count = self.params().mode_count;
        let spec = &self.manifest.case;
        let betas: Vec<f64> = grid
            .par_iter()
            .map(|&nu| -> romforge_core::Result<f64> {
                let mut case = spec.build(Some(nu))?;
                if let Some(n) = count {
                    case = case.with_mode_count(ModeCount::Lowest(n));
                }
                let modes = case.modes()?;
                let p = modes.nth_bending(bending)?;
                let lambda = ratio * case.thickness / peak(&modes.shapes[p]);
                step_single(&case.model, &modes, p, lambda, &[p])?.require_beta(p, p, p, p)
            })
            .collect::<romforge_core::Result<_>>()?;
        let base = grid.iter().position(|&nu| nu == 0.0).expect("grid holds 0");
        let (r10, r20) = constitutive_ratios(0.0)?;
        let mut rows = Vec::new();
        for (nu, b) in grid.iter().zip(&betas) {
            let (r1, r2) = constitutive_ratios(*nu)?;
            rows.push([num(*nu), num(*b), num(b / betas[base]), num(r1 / r10), num(r2 / r20)]);
        }
        self.out.csv("poisson_sweep.csv", &["nu", "beta", "ratio", "rho1_ratio", "rho2_ratio"], rows)?;
        Ok(())
    }

    fn slaves(&self) -> Result<Vec<usize>, StageError> {
        Ok(slave_modes(self.modes()?, &self.masters, SlaveSet::AllOthers))
    }

    fn condense(&mut self) -> StageResult {
        let modes = self.modes.as_ref().ok_or_else(|| missing("modes"))?;
        let coeffs = self.coeffs.as_ref().ok_or_else(|| missing("STEP coefficients"))?;
        let slaves = slave_modes(modes, &self.masters, SlaveSet::AllOthers);
        let mut spectra = Vec::new();
        let mut summaries = Vec::new();
        for &p in &self.masters {
            let spectrum = correction_spectrum(p, coeffs, modes, &slaves)?;
            let report = spectrum_report(&spectrum, self.params().threshold);
            self.out.csv(&format!("spectrum_mode{}.csv", p + 1), &crate::report::SpectrumReport::HEADER, report.csv_rows())?;
            self.out.csv(
                &format!("convergence_mode{}.csv", p + 1),
                &["basis_size", "partial_gamma", "relative_error"],
                report.convergence_rows(),
            )?;
            summaries.push(report.summary);
            spectra.push(spectrum);
        }
        let gamma = condensed_cubic(&self.masters, coeffs, modes, &slaves)?;
        self.out.csv("gamma_condense.csv", &GAMMA_HEADER, gamma_rows(&gamma))?;
        self.out.json("condense.json", &summaries)?;
        self.spectra = spectra;
        self.gammas.insert(Stage::Condense, gamma);
        Ok(())
    }

    fn stiffness(&mut self) -> Result<&SymmetricSolver, StageError> {
        if self.stiffness.is_none() {
            self.stiffness = Some(SymmetricSolver::new(&self.case.model.linear_stiffness())?);
        }
        Ok(self.stiffness.as_ref().expect("just set"))
    }

    /// Only single-mode and pair coefficients are available from SMD manifolds;
    /// three distinct master indices are left out of the map.
    fn smd(&mut self) -> StageResult {
        self.stiffness()?;
        let modes = self.modes.as_ref().ok_or_else(|| missing("modes"))?;
        let k = self.stiffness.as_ref().expect("factored above");
        let model = &self.case.model;
        let mut gamma = GammaMap::new();
        let mut decomposition = Vec::new();
        for &p in &self.masters {
            let t = self.step_lambda(p)?;
            gamma.insert((p, p, p, p), smd_condensed_cubic(model, k, modes, p, t)?);
            if let Some(c) = &self.coeffs {
                let theta = smd_same(model, k, modes, p, t)?.vector;
                let mut rest = theta.clone();
                let mut parts = Vec::new();
                for s in 0..modes.len() {
                    let Some(a) = c.alpha(s, p, p) else { continue };
                    let w = 2.0 * a / modes.omega[s].powi(2);
                    for (r, v) in rest.iter_mut().zip(&modes.shapes[s]) {
                        *r += w * v;
                    }
                    parts.push((s, w));
                }
                let residual = romforge_core::linalg::norm(&rest) / romforge_core::linalg::norm(&theta);
                parts.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then(a.0.cmp(&b.0)));
                let rows = parts.iter().enumerate().map(|(rank, (s, w))| {
                    [(rank + 1).to_string(), (s + 1).to_string(), num(modes.omega[*s]), num(-*w)]
                });
                self.out.csv(&format!("smd_participation_mode{}.csv", p + 1), &["rank", "mode", "omega", "coefficient"], rows)?;
                decomposition.push(json!({
                    "master": p + 1,
                    "complete_basis": modes.len() == model.ndof(),
                    "relative_residual": residual,
                }));
            }
        }
        for (x, &i) in self.masters.iter().enumerate() {
            for &j in &self.masters[x + 1..] {
                let t = self.step_lambda(i)?.min(self.step_lambda(j)?);
                gamma.extend(smd_mixed_gamma(model, k, modes, (i, j), t)?);
            }
        }
        self.out.csv("gamma_smd.csv", &GAMMA_HEADER, gamma_rows(&gamma))?;
        self.out.json("smd.json", &json!({ "decomposition": decomposition }))?;
        self.gammas.insert(Stage::Smd, gamma);
        Ok(())
    }

    fn nnm(&mut self) -> StageResult {
        let modes = self.modes()?;
        let coeffs = self.coeffs.as_ref().ok_or_else(|| missing("STEP coefficients"))?;
        let slaves = self.slaves()?;
        let mut rows = Vec::new();
        let mut first = None;
        for &p in &self.masters {
            let (rom, c) = nnm_rom(p, coeffs, modes, &slaves, self.params().zeta)?;
            rows.push(json!({
                "master": p + 1,
                "omega": modes.omega[p],
                "cubic": c.cubic,
                "velocity": c.velocity,
                "resonance_gap": if c.resonance_gap.is_finite() { Some(c.resonance_gap) } else { None },
            }));
            first.get_or_insert(rom);
        }
        self.out.json("nnm.json", &rows)?;
        if self.masters.len() == 1 {
            self.nnm = first;
            let g = self.nnm.as_ref().expect("one master").gamma.clone();
            self.gammas.insert(Stage::Nnm, g);
        }
        Ok(())
    }

    fn master_selection(&self) -> Result<MasterSelection, StageError> {
        let set = self.params().mstep_masters.clone().unwrap_or_else(|| self.case.midset.clone());
        let dir = self.params().mstep_direction.unwrap_or(self.case.direction);
        Ok(select_masters(&self.case.model, &set, dir)?)
    }

    fn mstep_lambda(&self, p: usize, ratio: f64) -> Result<f64, StageError> {
        Ok(ratio * self.case.thickness / peak(&self.modes()?.shapes[p]))
    }

    fn reference_gamma(&mut self, p: usize) -> Result<f64, StageError> {
        for s in [Stage::Condense, Stage::Smd] {
            if let Some(g) = self.gammas.get(&s).and_then(|g| g.get(&(p, p, p, p))) {
                return Ok(*g);
            }
        }
        let t = self.step_lambda(p)?;
        self.stiffness()?;
        Ok(smd_condensed_cubic(&self.case.model, self.stiffness.as_ref().expect("factored"), self.modes()?, p, t)?)
    }

    fn mstep(&mut self) -> StageResult {
        let sel = self.master_selection()?;
        let opts = NewtonOptions::default();
        let ratio = self.params().mstep_amplitude_ratio;
        let modes = self.modes()?;
        let model = &self.case.model;
        let mut gamma = GammaMap::new();
        let mut quality = Vec::new();
        for &p in &self.masters {
            let r = mstep_gamma(model, modes, p, self.mstep_lambda(p, ratio)?, &sel, &self.masters, &opts)?;
            for &(k, g) in &r.gamma {
                gamma.insert((k, p, p, p), g);
            }
            quality.push(json!({
                "master": p + 1,
                "amplitude": r.amplitude,
                "e1": r.e1.iter().map(|(k, e)| json!({"mode": k + 1, "e1": e})).collect::<Vec<_>>(),
                "e2": r.e2,
                "unreliable": r.unreliable,
            }));
        }
        for (x, &i) in self.masters.iter().enumerate() {
            for &j in &self.masters[x + 1..] {
                let l = (self.mstep_lambda(i, ratio)?, self.mstep_lambda(j, ratio)?);
                gamma.extend(mstep_gamma_mixed(model, modes, (i, j), l, &sel, &self.masters, &opts)?);
            }
        }
        self.out.csv("gamma_mstep.csv", &GAMMA_HEADER, gamma_rows(&gamma))?;
        self.out.json("mstep.json", &json!({ "masters": sel.source_set, "direction": sel.direction, "quality": quality }))?;
        if self.params().mstep_check {
            self.mstep_check(&opts)?;
        }
        if !self.params().validity_ratios.is_empty() {
            self.validity(&sel, &opts)?;
        }
        self.gammas.insert(Stage::Mstep, gamma);
        Ok(())
    }

    fn mstep_check(&mut self, opts: &NewtonOptions) -> StageResult {
        let p = self.masters[0];
        let lambda = self.mstep_lambda(p, self.params().mstep_amplitude_ratio)?;
        let dir = self.params().mstep_direction.unwrap_or(self.case.direction);
        let modes = self.modes()?;
        let model = &self.case.model;
        let sets: Vec<&str> = CANONICAL_SETS.iter().copied().filter(|s| model.mesh().node_sets.contains_key(*s)).collect();
        let rows: Vec<[String; 6]> = sets
            .par_iter()
            .map(|&set| {
                let result = select_masters(model, set, dir)
                    .and_then(|sel| mstep_gamma(model, modes, p, lambda, &sel, &[p], opts));
                match result {
                    Ok(r) => {
                        let e1 = r.e1.iter().find(|e| e.0 == p).map_or(f64::NAN, |e| e.1);
                        [set.into(), (p + 1).to_string(), num(r.gamma_of(p).unwrap_or(f64::NAN)), num(e1), num(r.e2), r.unreliable.to_string()]
                    }
                    Err(e) => [set.into(), (p + 1).to_string(), "nan".into(), "nan".into(), "nan".into(), format!("failed: {e}")],
                }
            })
            .collect();
        self.out.csv("mstep_check.csv", &["masters", "mode", "gamma", "e1", "e2", "unreliable"], rows)?;
        Ok(())
    }

    fn validity(&mut self, sel: &MasterSelection, opts: &NewtonOptions) -> StageResult {
        let ratios = self.params().validity_ratios.clone();
        let mut ranges = Vec::new();
        for p in self.masters.clone() {
            let reference = self.reference_gamma(p)?;
            let modes = self.modes()?;
            let points = validity_points(&self.case.model, modes, p, &ratios, self.case.thickness, sel, reference, opts);
            let rows = points.iter().map(|pt| [num(pt.ratio), pt.gamma.map_or("nan".into(), num), num(pt.error)]);
            self.out.csv(&format!("validity_mode{}.csv", p + 1), &["ratio", "gamma", "relative_error"], rows)?;
            ranges.push(match validity_range(points) {
                Ok(v) => json!({"master": p + 1, "reference": reference, "lower": v.lower, "upper": v.upper}),
                Err(Error::EmptyValidityRange(_)) => json!({"master": p + 1, "reference": reference, "lower": null, "upper": null}),
                Err(e) => return Err(e.into()),
            });
        }
        self.out.json("validity.json", &ranges)?;
        Ok(())
    }

    /// Reduced model from the preferred available coefficient source.
    fn rom(&self) -> Result<(Stage, ReducedModel), StageError> {
        let modes = self.modes()?;
        let zeta = vec![self.params().zeta; self.masters.len()];
        for s in [Stage::Condense, Stage::Smd, Stage::Mstep] {
            if let Some(g) = self.gammas.get(&s) {
                let g: GammaMap = g
                    .iter()
                    .filter(|((r, i, j, k), _)| [r, i, j, k].iter().all(|m| self.masters.contains(m)))
                    .map(|(k, v)| (*k, *v))
                    .collect();
                return Ok((s, ReducedModel::from_gamma(&self.masters, modes, g, &zeta)?));
            }
        }
        self.nnm.clone().map(|r| (Stage::Nnm, r)).ok_or_else(|| missing("corrected coefficients"))
    }

    /// Free dof of largest transverse motion of the first master, and the
    /// physical probe weights of every master there.
    fn probe(&self) -> Result<(usize, Vec<f64>), StageError> {
        let modes = self.modes()?;
        let phi = &modes.shapes[self.masters[0]];
        let dofs = self.case.model.dofs();
        let dof = (0..phi.len())
            .filter(|&i| dofs.node_dir(i).1 == self.case.direction)
            .max_by(|&a, &b| phi[a].abs().total_cmp(&phi[b].abs()))
            .ok_or_else(|| missing("transverse dof"))?;
        Ok((dof, self.masters.iter().map(|&m| modes.shapes[m][dof]).collect()))
    }

    fn forced_system(&self, rom: &ReducedModel) -> Result<(OscillatorSystem, f64), StageError> {
        let (_, w) = self.probe()?;
        let p = self.params();
        let w0 = rom.omega[0];
        let f = 2.0 * p.zeta * w0 * w0 * p.forcing_ratio * self.case.thickness / w[0].abs();
        let mut forcing = vec![0.0; rom.masters.len()];
        forcing[0] = f;
        Ok((rom.clone().with_forcing(forcing).to_oscillator()?, f))
    }

    fn continuation_options(&self) -> Result<ContinuationOptions, StageError> {
        Ok(ContinuationOptions { harmonics: self.params().harmonics, probe: Some(self.probe()?.1), ..Default::default() })
    }

    fn write_branch(&mut self, name: &str, branch: &FrfBranch) -> StageResult {
        let mut header = vec!["omega".to_string(), "amp".to_string()];
        for k in 1..=branch.harmonics {
            header.push(format!("harmonic_{k}_cos"));
            header.push(format!("harmonic_{k}_sin"));
        }
        let rows: Vec<Vec<String>> = (0..branch.points.len())
            .map(|i| {
                let h = branch.probe_harmonics(i);
                let mut row = vec![num(branch.points[i].omega), num(branch.points[i].amplitude)];
                row.extend(h[1..].iter().map(|v| num(*v)));
                row
            })
            .collect();
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        self.out.csv(name, &header, rows)?;
        Ok(())
    }

    fn frf(&mut self) -> StageResult {
        let (source, rom) = self.rom()?;
        let (sys, force) = self.forced_system(&rom)?;
        let opts = self.continuation_options()?;
        let w0 = rom.omega[0];
        let (a, b) = self.params().omega_window;
        let branch = continue_frf(&sys, (a * w0, b * w0), &opts)?;
        self.write_branch("frf.csv", &branch)?;
        let mut partial = None;
        if let (Some(m), Some(spectrum)) = (self.params().partial_modes, self.spectra.first()) {
            let series = spectrum.convergence(romforge_core::reduction::SpectrumOrder::ByDecreasingFactor);
            let g = *series.get(m).ok_or_else(|| StageError::Msg(format!("only {} condensed modes", series.len() - 1)))?;
            let mut prom = rom.clone();
            let p = self.masters[0];
            prom.gamma = GammaMap::from([((p, p, p, p), g)]);
            prom.nnm_velocity_coeff = None;
            let (psys, _) = self.forced_system(&prom)?;
            let pb = continue_frf(&psys, (a * w0, b * w0), &opts)?;
            self.write_branch("frf_partial.csv", &pb)?;
            partial = Some(json!({"condensed_modes": m, "gamma": g, "points": pb.points.len(), "truncated": pb.truncated}));
        }
        let (probe_dof, _) = self.probe()?;
        self.out.json(
            "frf.json",
            &FrfManifest {
                source: source.name(),
                masters: rom.masters.iter().map(|m| m + 1).collect(),
                omega: rom.omega.clone(),
                zeta: rom.zeta.clone(),
                forcing: force,
                probe_dof,
                harmonics: opts.harmonics,
                corrector_tol: opts.tol,
                ds: [opts.ds, opts.ds_min, opts.ds_max],
                window: [a * w0, b * w0],
                points: branch.points.len(),
                folds: branch.fold_count(),
                peak_amplitude: branch.peak().map(|p| p.amplitude),
                truncated: branch.truncated.clone(),
                partial,
            },
        )?;
        Ok(())
    }

    fn backbone(&mut self) -> StageResult {
        let (source, rom) = self.rom()?;
        let sys = rom.to_oscillator()?.conservative();
        let opts = self.continuation_options()?;
        let (_, w) = self.probe()?;
        let p = self.params();
        let top = p.backbone_max_ratio * self.case.thickness / w[0].abs();
        let n = p.backbone_points;
        let amps: Vec<f64> = (1..=n).map(|i| top * i as f64 / n as f64).collect();
        let branch = backbone(&sys, 0, &amps, &opts)?;
        self.write_branch("backbone.csv", &branch)?;
        self.out.json(
            "backbone.json",
            &json!({"source": source.name(), "harmonics": opts.harmonics, "corrector_tol": opts.tol, "points": branch.points.len(), "truncated": branch.truncated}),
        )?;
        Ok(())
    }

    /// Side-by-side Gamma from every source that ran.
    fn comparison(&mut self) -> std::io::Result<()> {
        if self.gammas.len() < 2 {
            return Ok(());
        }
        let sources: Vec<Stage> = self.gammas.keys().copied().collect();
        let first = &self.gammas[&sources[0]];
        let mut header = vec!["r", "i", "j", "k"];
        header.extend(sources.iter().map(|s| s.name()));
        let rows: Vec<Vec<String>> = first
            .keys()
            .map(|&(r, i, j, k)| {
                let mut row = vec![(r + 1).to_string(), (i + 1).to_string(), (j + 1).to_string(), (k + 1).to_string()];
                row.extend(sources.iter().map(|s| self.gammas[s].get(&(r, i, j, k)).map_or("nan".into(), |v| num(*v))));
                row
            })
            .collect();
        self.out.csv("gamma_comparison.csv", &header, rows)?;
        Ok(())
    }
}

#[derive(Serialize)]
struct FrfManifest {
    source: &'static str,
    masters: Vec<usize>,
    omega: Vec<f64>,
    zeta: Vec<f64>,
    forcing: f64,
    probe_dof: usize,
    harmonics: usize,
    corrector_tol: f64,
    ds: [f64; 3],
    window: [f64; 2],
    points: usize,
    folds: usize,
    peak_amplitude: Option<f64>,
    truncated: Option<String>,
    partial: Option<serde_json::Value>,
}
