use super::dense::DenseLdlt;
use super::envelope::{envelope_cost, rcm_ordering, EnvelopeLdlt};
use super::sparse::CsrMatrix;
use crate::error::Result;

/// Systems larger than this are never factorised densely.
pub const DENSE_LIMIT: usize = 3000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverKind {
    /// Envelope factorisation unless the reordered profile costs more than a dense factorisation.
    Auto,
    Dense,
    Envelope,
}

/// Factorised symmetric (possibly indefinite) matrix.
pub enum SymmetricSolver {
    Dense(DenseLdlt),
    Envelope(EnvelopeLdlt),
}

impl SymmetricSolver {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        Self::with_kind(a, SolverKind::Auto)
    }

    pub fn with_kind(a: &CsrMatrix, kind: SolverKind) -> Result<Self> {
        let n = a.dim();
        match kind {
            SolverKind::Dense => Ok(SymmetricSolver::Dense(DenseLdlt::factorize(a.to_dense())?)),
            SolverKind::Envelope => Ok(SymmetricSolver::Envelope(EnvelopeLdlt::factorize(a)?)),
            SolverKind::Auto => {
                let perm = rcm_ordering(a);
                let (_, flops) = envelope_cost(a, &perm);
                let dense_flops = (n as f64).powi(3) / 3.0;
                if n <= DENSE_LIMIT && flops > dense_flops {
                    Ok(SymmetricSolver::Dense(DenseLdlt::factorize(a.to_dense())?))
                } else {
                    Ok(SymmetricSolver::Envelope(EnvelopeLdlt::factorize_with_order(a, perm)?))
                }
            }
        }
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        match self {
            SymmetricSolver::Dense(f) => f.solve(b),
            SymmetricSolver::Envelope(f) => Ok(f.solve(b)),
        }
    }
}
