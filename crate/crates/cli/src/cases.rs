//! Built-in test structures and the modal pipeline shared by every stage.

use std::path::Path;

use romforge_core::fe::{generate_beam_mesh, generate_circular_plate_mesh};
use romforge_core::modal::{align_degenerate, alignment_weights, classify_modes, solve_modes, AlignmentWeight, ModeCount};
use romforge_core::{ElementKind, FeModel, Material, Mesh, ModeSet, Result};
use serde::{Deserialize, Serialize};

pub const STEEL_E: f64 = 210e9;
pub const STEEL_RHO: f64 = 7800.0;

/// Relative gap on `w^2` under which eigenvalues are treated as repeated.
pub const DEGENERACY_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum CaseKind {
    ThinBeam,
    ThickBeam,
    CircularPlate,
}

/// How repeated eigenvalues are oriented before classification.
#[derive(Clone, Debug)]
pub struct Alignment {
    pub set: String,
    pub direction: usize,
    pub weight: AlignmentWeight,
}

/// A mesh with material, the middle line/surface used to label modes, and
/// the geometric scales used to size prescribed amplitudes.
#[derive(Clone, Debug)]
pub struct Case {
    pub name: String,
    pub model: FeModel,
    pub midset: String,
    /// Transverse direction of the middle line/surface.
    pub normal: [f64; 3],
    /// Dof direction index of `normal`.
    pub direction: usize,
    pub thickness: f64,
    /// Beam length or plate radius.
    pub span: f64,
    pub mode_count: ModeCount,
    pub alignment: Option<Alignment>,
}

/// Thin clamped-clamped strip, 1 m x 50 mm x 1 mm, 100 x 2 x 4 HEX20.
pub fn thin_beam(nu: f64) -> Result<Case> {
    thin_beam_with(nu, 100)
}

pub fn thin_beam_with(nu: f64, nx: usize) -> Result<Case> {
    let mesh = generate_beam_mesh(1.0, 0.05, 0.001, nx, 2, 4, ElementKind::Hex20, true)?;
    Ok(Case {
        name: "thin_beam".into(),
        model: FeModel::new(mesh, Material::new(STEEL_E, nu, STEEL_RHO)?)?,
        midset: "midline".into(),
        normal: [0.0, 1.0, 0.0],
        direction: 1,
        thickness: 0.001,
        span: 1.0,
        mode_count: ModeCount::Lowest(8),
        alignment: None,
    })
}

/// Thick clamped-clamped beam, 1 m x 30 mm x 30 mm, 15 x 2 x 2 HEX20 (1287 dofs).
/// The square section makes the two bending families degenerate; they are
/// split by transverse midline motion.
pub fn thick_beam(nu: f64) -> Result<Case> {
    let mesh = generate_beam_mesh(1.0, 0.03, 0.03, 15, 2, 2, ElementKind::Hex20, true)?;
    Ok(Case {
        name: "thick_beam".into(),
        model: FeModel::new(mesh, Material::new(STEEL_E, nu, STEEL_RHO)?)?,
        midset: "midline".into(),
        normal: [0.0, 1.0, 0.0],
        direction: 1,
        thickness: 0.03,
        span: 1.0,
        mode_count: ModeCount::All,
        alignment: Some(Alignment { set: "midline".into(), direction: 1, weight: AlignmentWeight::Uniform }),
    })
}

/// Refinement of the plate used by default; the full spectrum stays within the dense eigensolver.
pub const PLATE_REFINEMENT: usize = 4;

/// Clamped disc, R = 0.3 m, h = 5 mm, O-grid HEX20 with two layers.
pub fn circular_plate(refinement: usize, nu: f64) -> Result<Case> {
    let mesh = generate_circular_plate_mesh(0.3, 0.005, refinement, ElementKind::Hex20, true)?;
    Ok(Case {
        name: "circular_plate".into(),
        model: FeModel::new(mesh, Material::new(STEEL_E, nu, STEEL_RHO)?)?,
        midset: "midsurface".into(),
        normal: [0.0, 0.0, 1.0],
        direction: 2,
        thickness: 0.005,
        span: 0.3,
        mode_count: ModeCount::All,
        alignment: Some(Alignment {
            set: "midsurface".into(),
            direction: 2,
            weight: AlignmentWeight::SquaredCoordinate(0),
        }),
    })
}

pub fn builtin(kind: CaseKind, nu: Option<f64>) -> Result<Case> {
    match kind {
        CaseKind::ThinBeam => thin_beam(nu.unwrap_or(0.0)),
        CaseKind::ThickBeam => thick_beam(nu.unwrap_or(0.3)),
        CaseKind::CircularPlate => circular_plate(PLATE_REFINEMENT, nu.unwrap_or(0.3)),
    }
}

/// Case read from a mesh JSON file. Bending is labelled along `normal` on `midset`.
pub fn from_mesh_file(path: &Path, material: Material, midset: &str, direction: usize, thickness: f64) -> Result<Case> {
    let mesh = read_mesh(path)?;
    let (lo, hi) = mesh.bounding_box();
    let span = (0..3).map(|d| hi[d] - lo[d]).fold(0.0f64, f64::max);
    let mut normal = [0.0; 3];
    normal[direction.min(2)] = 1.0;
    let model = FeModel::new(mesh, material)?;
    let mode_count = if model.ndof() <= 3000 { ModeCount::All } else { ModeCount::Lowest(20) };
    Ok(Case {
        name: path.file_stem().map_or("custom".into(), |s| s.to_string_lossy().into_owned()),
        model,
        midset: midset.into(),
        normal,
        direction,
        thickness,
        span,
        mode_count,
        alignment: None,
    })
}

/// Plain mesh JSON, or the hash-tagged `mesh.json` written by the `mesh` stage.
pub fn read_mesh(path: &Path) -> Result<Mesh> {
    let text = std::fs::read_to_string(path)?;
    match Mesh::from_json_str(&text) {
        Ok(m) => Ok(m),
        Err(plain) => {
            let v: serde_json::Value = serde_json::from_str(&text)?;
            match v.get("data") {
                Some(d) => Mesh::from_json_str(&d.to_string()),
                None => Err(plain),
            }
        }
    }
}

impl Case {
    pub fn with_mode_count(mut self, count: ModeCount) -> Self {
        self.mode_count = count;
        self
    }

    /// Eigenpairs, with repeated eigenvalues oriented and every mode labelled.
    pub fn modes(&self) -> Result<ModeSet> {
        let k = self.model.linear_stiffness();
        let m = self.model.mass_matrix();
        let mut modes = solve_modes(&k, &m, self.mode_count)?;
        if let Some(a) = &self.alignment {
            let w = alignment_weights(&self.model, &a.set, a.direction, a.weight)?;
            align_degenerate(&mut modes, &w, DEGENERACY_TOL);
        }
        classify_modes(&mut modes, &self.model, &self.midset, self.normal)?;
        Ok(modes)
    }
}
