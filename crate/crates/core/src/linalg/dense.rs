use ndarray::{Array1, Array2};
use ndarray_linalg::{BKFactorized, Cholesky, Diag, Eigh, FactorizeHInto, SolveH, SolveTriangular, UPLO};

use crate::error::{Error, Result};

/// Generalised symmetric-definite eigenproblem `K v = w M v`, eigenvalues ascending,
/// eigenvectors as `M`-orthonormal columns. Reduced to standard form with the
/// Cholesky factor `M = L L^T`.
pub fn generalized_eigh(k: &Array2<f64>, m: &Array2<f64>) -> Result<(Vec<f64>, Array2<f64>)> {
    let l = m.cholesky(UPLO::Lower)?;
    let a = l.solve_triangular(UPLO::Lower, Diag::NonUnit, k)?;
    let mut c = l.solve_triangular(UPLO::Lower, Diag::NonUnit, &a.t().to_owned())?;
    // symmetrise away round-off before the symmetric solver reads one triangle
    let ct = c.t().to_owned();
    c += &ct;
    c *= 0.5;
    let (vals, y) = c.eigh(UPLO::Lower)?;
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eigen("non-finite eigenvalue".into()));
    }
    let vecs = l.t().to_owned().solve_triangular(UPLO::Upper, Diag::NonUnit, &y)?;
    Ok((vals.to_vec(), vecs))
}

/// Standard symmetric eigenproblem, eigenvalues ascending.
pub fn symmetric_eigh(a: &Array2<f64>) -> Result<(Vec<f64>, Array2<f64>)> {
    let (vals, vecs) = a.eigh(UPLO::Lower)?;
    Ok((vals.to_vec(), vecs))
}

/// Bunch-Kaufman factorisation of a dense symmetric matrix.
pub struct DenseLdlt {
    factor: BKFactorized<ndarray::OwnedRepr<f64>>,
}

impl DenseLdlt {
    pub fn factorize(a: Array2<f64>) -> Result<Self> {
        Ok(DenseLdlt { factor: a.factorizeh_into()? })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let x = self.factor.solveh(&Array1::from(b.to_vec()))?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Singular(0));
        }
        Ok(x.to_vec())
    }
}

/// Factor a dense SPD matrix large enough to reach the blocked LAPACK paths
/// and check `L L^T = A`. Some OpenBLAS builds select kernels that fail this
/// on particular CPUs; `OPENBLAS_CORETYPE=Haswell` is a known-good override.
pub fn lapack_self_test() -> bool {
    let n = 96;
    let a = Array2::from_shape_fn((n, n), |(i, j)| {
        let d = (i as f64 - j as f64).abs();
        if i == j {
            4.0 + (i % 7) as f64
        } else {
            1.0 / (1.0 + d * d)
        }
    });
    let Ok(l) = a.cholesky(UPLO::Lower) else { return false };
    let err = (&l.dot(&l.t()) - &a).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    err < 1e-10
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn blocked_cholesky_is_correct() {
        assert!(lapack_self_test(), "LAPACK Cholesky is wrong on this host; set OPENBLAS_CORETYPE=Haswell");
    }

    #[test]
    fn generalized_eigenvectors_are_columns() {
        let k = array![[4.0, 1.0, 0.0], [1.0, 3.0, 0.5], [0.0, 0.5, 2.0]];
        let m = array![[2.0, 0.1, 0.0], [0.1, 1.0, 0.0], [0.0, 0.0, 1.5]];
        let (w, v) = generalized_eigh(&k, &m).unwrap();
        assert!(w.windows(2).all(|p| p[0] <= p[1]));
        for j in 0..3 {
            let c = v.column(j).to_owned();
            let r = k.dot(&c) - m.dot(&c) * w[j];
            assert!(r.iter().all(|x| x.abs() < 1e-12));
            assert!((c.dot(&m.dot(&c)) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bunch_kaufman_handles_indefinite_systems() {
        let a = array![[1.0, 2.0], [2.0, -3.0]];
        let f = DenseLdlt::factorize(a.clone()).unwrap();
        let x = f.solve(&[1.0, 2.0]).unwrap();
        let r = a.dot(&Array1::from(x)) - array![1.0, 2.0];
        assert!(r.iter().all(|v| v.abs() < 1e-14));
    }
}
