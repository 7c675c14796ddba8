//! Nonlinear reduced-order models for beams and plates discretised with
//! quadratic and trilinear hexahedra.
//!
//! The crate is organised bottom-up:
//!
//! * [`fe`]: meshes, Saint Venant-Kirchhoff hexahedra, assembly, constrained static solves.
//! * [`linalg`]: sparse storage, envelope factorisation, dense LAPACK helpers, Lanczos.
//! * [`modal`]: generalised eigenproblem, mode alignment and bending classification.
//! * [`step`]: quadratic/cubic modal coupling coefficients from prescribed-displacement evaluations.
//! * [`reduction`]: static condensation, static modal derivatives, single-mode normal form.
//! * [`mstep`]: condensed cubic coefficients from midline/midsurface-prescribed nonlinear solves.
//! * [`hbm`]: harmonic balance and pseudo-arclength continuation for reduced oscillators.
//! * [`oracles`]: closed-form references used for verification.

pub mod error;
pub mod fe;
pub mod hbm;
pub mod linalg;
pub mod modal;
pub mod mstep;
pub mod oracles;
pub mod reduction;
pub mod step;

pub use error::{Error, Result};
pub use fe::{DofMap, ElementKind, FeModel, Material, Mesh, NonlinearScale};
pub use linalg::CsrMatrix;
pub use modal::{ModeLabel, ModeSet};
