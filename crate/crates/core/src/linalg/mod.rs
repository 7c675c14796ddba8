//! Sparse and dense linear algebra.

pub mod dense;
pub mod envelope;
pub mod lanczos;
pub mod solver;
pub mod sparse;

pub use envelope::{rcm_ordering, EnvelopeLdlt};
pub use lanczos::{shift_invert_lanczos, LanczosOptions};
pub use solver::{SolverKind, SymmetricSolver};
pub use sparse::{dot, norm, CsrMatrix};
