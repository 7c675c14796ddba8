//! Command-line front end and benchmark harness: built-in structures, run
//! manifests, the stage pipeline and the acceptance suite.

pub mod acceptance;
pub mod artifacts;
pub mod cases;
pub mod manifest;
pub mod pipeline;
pub mod report;

pub use manifest::{CaseSpec, Parameters, RunManifest, Stage};
pub use pipeline::{run_case, RunError, RunSummary};
