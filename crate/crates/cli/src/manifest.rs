//! Run manifests: what to build, which stages to run and where to write.

use std::path::{Path, PathBuf};

use romforge_core::{Material, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cases::{self, Case, CaseKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Mesh,
    Modal,
    Step,
    Condense,
    Smd,
    Nnm,
    Mstep,
    Frf,
    Backbone,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Mesh => "mesh",
            Stage::Modal => "modal",
            Stage::Step => "step",
            Stage::Condense => "condense",
            Stage::Smd => "smd",
            Stage::Nnm => "nnm",
            Stage::Mstep => "mstep",
            Stage::Frf => "frf",
            Stage::Backbone => "backbone",
        }
    }

    /// Stages that must run earlier in the same pipeline.
    pub fn requires(self) -> &'static [Stage] {
        match self {
            Stage::Mesh | Stage::Modal => &[],
            Stage::Step | Stage::Smd | Stage::Mstep => &[Stage::Modal],
            Stage::Condense | Stage::Nnm => &[Stage::Step],
            Stage::Frf | Stage::Backbone => &[Stage::Modal],
        }
    }

    /// Stages providing corrected cubic coefficients for the reduced dynamics.
    pub const GAMMA_SOURCES: [Stage; 4] = [Stage::Condense, Stage::Smd, Stage::Mstep, Stage::Nnm];

    /// `stage` preceded by everything it depends on, in dependency order.
    pub fn with_prerequisites(self) -> Vec<Stage> {
        let mut out = Vec::new();
        fn visit(s: Stage, out: &mut Vec<Stage>) {
            for &r in s.requires() {
                visit(r, out);
            }
            if !out.contains(&s) {
                out.push(s);
            }
        }
        if matches!(self, Stage::Frf | Stage::Backbone) {
            visit(Stage::Condense, &mut out);
        }
        visit(self, &mut out);
        out
    }
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CaseSpec {
    Builtin {
        name: CaseKind,
        #[serde(default)]
        poisson_ratio: Option<f64>,
        /// Plate O-grid refinement (ignored for beams).
        #[serde(default)]
        refinement: Option<usize>,
    },
    Mesh {
        path: PathBuf,
        young_modulus: f64,
        poisson_ratio: f64,
        density: f64,
        /// Node set used to label bending modes and as default M-STEP masters.
        midset: String,
        /// Transverse direction (0, 1, 2).
        direction: usize,
        thickness: f64,
    },
}

impl CaseSpec {
    pub fn builtin(name: CaseKind) -> Self {
        CaseSpec::Builtin { name, poisson_ratio: None, refinement: None }
    }

    /// Build the case, optionally overriding Poisson's ratio.
    pub fn build(&self, nu: Option<f64>) -> Result<Case> {
        match self {
            CaseSpec::Builtin { name, poisson_ratio, refinement } => {
                let nu = nu.or(*poisson_ratio);
                match (name, refinement) {
                    (CaseKind::CircularPlate, Some(r)) => cases::circular_plate(*r, nu.unwrap_or(0.3)),
                    _ => cases::builtin(*name, nu),
                }
            }
            CaseSpec::Mesh { path, young_modulus, poisson_ratio, density, midset, direction, thickness } => {
                let material = Material::new(*young_modulus, nu.unwrap_or(*poisson_ratio), *density)?;
                cases::from_mesh_file(path, material, midset, *direction, *thickness)
            }
        }
    }

    pub fn poisson_ratio(&self) -> Option<f64> {
        match self {
            CaseSpec::Builtin { poisson_ratio, .. } => *poisson_ratio,
            CaseSpec::Mesh { poisson_ratio, .. } => Some(*poisson_ratio),
        }
    }
}

fn default_modes() -> Vec<usize> {
    vec![1]
}
fn default_step_ratio() -> f64 {
    0.05
}
fn default_mstep_ratio() -> f64 {
    0.5
}
fn default_threshold() -> f64 {
    romforge_core::reduction::NEGLIGIBLE_FACTOR
}
fn default_zeta() -> f64 {
    0.005
}
fn default_harmonics() -> usize {
    3
}
fn default_window() -> (f64, f64) {
    (0.8, 1.6)
}
fn default_one() -> f64 {
    1.0
}
fn default_backbone_points() -> usize {
    40
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Parameters {
    /// Master modes as 1-based bending-mode numbers.
    #[serde(default = "default_modes")]
    pub bending_modes: Vec<usize>,
    /// Largest STEP displacement as a fraction of the thickness.
    #[serde(default = "default_step_ratio")]
    pub step_amplitude_ratio: f64,
    /// Largest M-STEP prescribed displacement as a fraction of the thickness.
    #[serde(default = "default_mstep_ratio")]
    pub mstep_amplitude_ratio: f64,
    /// M-STEP master node set; the case's middle line/surface if absent.
    #[serde(default)]
    pub mstep_masters: Option<String>,
    #[serde(default)]
    pub mstep_direction: Option<usize>,
    /// Emit the e1/e2 table over every canonical line/surface of the mesh.
    #[serde(default)]
    pub mstep_check: bool,
    /// Amplitude ratios (of the thickness) for the M-STEP validity sweep.
    #[serde(default)]
    pub validity_ratios: Vec<f64>,
    /// Poisson ratios for the beta sweep run with the `step` stage.
    #[serde(default)]
    pub poisson_sweep: Vec<f64>,
    /// Normalised correction factor under which a condensed mode is negligible.
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    /// Lowest modes computed (all modes if absent and the case defaults to all).
    #[serde(default)]
    pub mode_count: Option<usize>,
    #[serde(default = "default_zeta")]
    pub zeta: f64,
    #[serde(default = "default_harmonics")]
    pub harmonics: usize,
    /// Excitation window as multiples of the first master frequency.
    #[serde(default = "default_window")]
    pub omega_window: (f64, f64),
    /// Linear resonance amplitude at the probe as a fraction of the thickness.
    #[serde(default = "default_one")]
    pub forcing_ratio: f64,
    /// Also compute the FRF of a ROM whose Gamma keeps only this many condensed
    /// modes (largest factors first). Single master only.
    #[serde(default)]
    pub partial_modes: Option<usize>,
    /// Largest backbone probe amplitude as a fraction of the thickness.
    #[serde(default = "default_one")]
    pub backbone_max_ratio: f64,
    #[serde(default = "default_backbone_points")]
    pub backbone_points: usize,
}

impl Default for Parameters {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all parameters have defaults")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub case: CaseSpec,
    #[serde(default)]
    pub pipeline: Vec<Stage>,
    #[serde(default)]
    pub parameters: Parameters,
    pub output_dir: PathBuf,
}

#[derive(Debug, thiserror::Error)]
pub enum ManifestError {
    #[error("stage `{stage}` requires `{missing}` earlier in the pipeline")]
    MissingPrerequisite { stage: Stage, missing: Stage },
    #[error("stage `{0}` needs one of condense, smd, mstep or nnm earlier in the pipeline")]
    NoGammaSource(Stage),
    #[error("stage `{0}` listed twice")]
    Duplicate(Stage),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("cannot read manifest: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse manifest: {0}")]
    Json(#[from] serde_json::Error),
}

impl RunManifest {
    pub fn new(case: CaseSpec, pipeline: Vec<Stage>, output_dir: impl Into<PathBuf>) -> Self {
        RunManifest { case, pipeline, parameters: Parameters::default(), output_dir: output_dir.into() }
    }

    pub fn read(path: &Path) -> std::result::Result<Self, ManifestError> {
        let m: RunManifest = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> std::result::Result<(), ManifestError> {
        for (idx, &stage) in self.pipeline.iter().enumerate() {
            let before = &self.pipeline[..idx];
            if before.contains(&stage) {
                return Err(ManifestError::Duplicate(stage));
            }
            for &r in stage.requires() {
                if !before.contains(&r) {
                    return Err(ManifestError::MissingPrerequisite { stage, missing: r });
                }
            }
            if matches!(stage, Stage::Frf | Stage::Backbone) && !Stage::GAMMA_SOURCES.iter().any(|s| before.contains(s)) {
                return Err(ManifestError::NoGammaSource(stage));
            }
        }
        let p = &self.parameters;
        let bad = |msg: &str| Err(ManifestError::Parameter(msg.into()));
        if p.bending_modes.is_empty() || p.bending_modes.contains(&0) {
            return bad("bending_modes must be non-empty 1-based mode numbers");
        }
        if !(p.step_amplitude_ratio > 0.0 && p.mstep_amplitude_ratio > 0.0) {
            return bad("amplitude ratios must be positive");
        }
        if p.validity_ratios.iter().any(|r| !(*r > 0.0)) {
            return bad("validity ratios must be positive");
        }
        if p.poisson_sweep.iter().any(|nu| !(*nu > -1.0 && *nu < 0.5)) {
            return bad("Poisson ratios must lie in (-1, 0.5)");
        }
        if !(p.zeta > 0.0) || p.harmonics == 0 {
            return bad("zeta must be positive and harmonics at least 1");
        }
        if !(p.omega_window.0 > 0.0 && p.omega_window.1 > p.omega_window.0) {
            return bad("omega_window must be an increasing positive pair");
        }
        if !(p.forcing_ratio > 0.0 && p.backbone_max_ratio > 0.0) || p.backbone_points < 2 {
            return bad("forcing and backbone settings must be positive");
        }
        if p.partial_modes.is_some() && p.bending_modes.len() != 1 {
            return bad("partial_modes needs a single master");
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, lower-case hex.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("manifest serialises");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prerequisites_are_ordered() {
        assert_eq!(Stage::Condense.with_prerequisites(), vec![Stage::Modal, Stage::Step, Stage::Condense]);
        assert_eq!(Stage::Frf.with_prerequisites(), vec![Stage::Modal, Stage::Step, Stage::Condense, Stage::Frf]);
    }

    #[test]
    fn broken_chains_are_rejected() {
        let case = CaseSpec::builtin(CaseKind::ThickBeam);
        let m = RunManifest::new(case.clone(), vec![Stage::Modal, Stage::Condense], "out");
        assert!(matches!(m.validate(), Err(ManifestError::MissingPrerequisite { .. })));
        let m = RunManifest::new(case.clone(), vec![Stage::Modal, Stage::Frf], "out");
        assert!(matches!(m.validate(), Err(ManifestError::NoGammaSource(_))));
        let m = RunManifest::new(case, vec![Stage::Modal, Stage::Smd, Stage::Frf], "out");
        assert!(m.validate().is_ok());
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = RunManifest::new(CaseSpec::builtin(CaseKind::ThinBeam), vec![Stage::Modal], "out");
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
        b.parameters.zeta = 0.01;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn defaults_round_trip() {
        let a = RunManifest::new(CaseSpec::builtin(CaseKind::CircularPlate), vec![], "out");
        let s = serde_json::to_string(&a).unwrap();
        assert_eq!(serde_json::from_str::<RunManifest>(&s).unwrap(), a);
        let minimal: RunManifest =
            serde_json::from_str(r#"{"case":{"kind":"builtin","name":"thick_beam"},"output_dir":"o"}"#).unwrap();
        assert_eq!(minimal.parameters, Parameters::default());
    }
}
