//! Block shift-invert Lanczos for the lowest eigenpairs of `K v = w M v`.
//!
//! The Krylov basis of `(K - sM)^{-1} M` is kept `M`-orthonormal by full
//! reorthogonalisation, eigenpairs come from a Rayleigh-Ritz projection of `K`,
//! and completeness of the converged set is confirmed by the inertia of
//! `K - cM` at a cut `c` placed above the last requested eigenvalue.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dense::symmetric_eigh;
use super::envelope::EnvelopeLdlt;
use super::sparse::{dot, norm, CsrMatrix};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct LanczosOptions {
    pub block_size: usize,
    /// Normwise backward error `||K x - w M x|| / ((||K|| + |w| ||M||) ||x||)`
    /// (infinity norms for the matrices) required for convergence.
    pub tol: f64,
    /// Upper bound on the basis size; `0` means automatic.
    pub max_basis: usize,
    /// Spectral shift; `None` uses zero when `K` is positive definite and a
    /// small negative shift otherwise.
    pub shift: Option<f64>,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions { block_size: 4, tol: 1e-13, max_basis: 0, shift: None, seed: 0x5eed }
    }
}

struct Basis {
    q: Vec<Vec<f64>>,
    mq: Vec<Vec<f64>>,
    kq: Vec<Vec<f64>>,
}

impl Basis {
    /// `M`-orthogonalise `v` against the basis (twice) and append it unless it
    /// is numerically dependent. Returns whether it was added.
    fn push(&mut self, mut v: Vec<f64>, k: &CsrMatrix, m: &CsrMatrix) -> bool {
        let mut mv = m.matvec(&v);
        let initial = dot(&v, &mv).max(0.0).sqrt();
        if initial == 0.0 {
            return false;
        }
        for _ in 0..2 {
            for (q, mq) in self.q.iter().zip(&self.mq) {
                let c = dot(mq, &v);
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= c * qi;
                }
            }
            mv = m.matvec(&v);
        }
        let nrm = dot(&v, &mv).max(0.0).sqrt();
        if nrm <= 1e-10 * initial {
            return false;
        }
        for (vi, mi) in v.iter_mut().zip(mv.iter_mut()) {
            *vi /= nrm;
            *mi /= nrm;
        }
        self.kq.push(k.matvec(&v));
        self.q.push(v);
        self.mq.push(mv);
        true
    }
}

/// Lowest `count` eigenpairs; eigenvectors are `M`-normalised.
pub fn shift_invert_lanczos(
    k: &CsrMatrix,
    m: &CsrMatrix,
    count: usize,
    opts: &LanczosOptions,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = k.dim();
    if count == 0 || count > n {
        return Err(Error::InvalidArgument(format!("requested {count} eigenpairs of a {n}-dof system")));
    }
    // without an explicit shift, factor K itself when it is positive definite;
    // otherwise (rigid-body modes) move slightly below zero
    let op = match opts.shift {
        Some(s) => EnvelopeLdlt::factorize(&k.linear_combination(1.0, m, -s))?,
        None => match EnvelopeLdlt::factorize(k) {
            Ok(f) if f.negative_pivots() == 0 => f,
            _ => {
                let kd = k.diagonal();
                let md = m.diagonal();
                let mean = kd.iter().zip(&md).map(|(a, b)| a / b).sum::<f64>() / n as f64;
                let s = -1e-8 * mean;
                EnvelopeLdlt::factorize(&k.linear_combination(1.0, m, -s))?
            }
        },
    };
    let apply = |x: &[f64]| op.solve(&m.matvec(x));
    let bs = opts.block_size.max(1);
    let max_basis = if opts.max_basis == 0 { n.min((4 * count + 60).max(80)) } else { opts.max_basis.min(n) };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut basis = Basis { q: Vec::new(), mq: Vec::new(), kq: Vec::new() };
    let mut block: Vec<Vec<f64>> = Vec::new();
    let random_block = |rng: &mut ChaCha8Rng, basis: &mut Basis| -> Vec<Vec<f64>> {
        let mut added = Vec::new();
        for _ in 0..bs {
            let v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
            if basis.push(apply(&v), k, m) {
                added.push(basis.q.last().unwrap().clone());
            }
        }
        added
    };
    block.extend(random_block(&mut rng, &mut basis));
    let mut last_check = 0;
    loop {
        let mut next = Vec::new();
        for v in &block {
            if basis.q.len() >= max_basis {
                break;
            }
            if basis.push(apply(v), k, m) {
                next.push(basis.q.last().unwrap().clone());
            }
        }
        if next.is_empty() && basis.q.len() < max_basis {
            next = random_block(&mut rng, &mut basis);
        }
        block = next;
        let size = basis.q.len();
        let due = size >= count + 2 * bs && (size - last_check >= 4 * bs || size >= max_basis);
        if !due && size < max_basis {
            continue;
        }
        last_check = size;
        if let Some(result) = rayleigh_ritz(k, m, &basis, count, opts.tol)? {
            return Ok(result);
        }
        if size >= max_basis {
            return Err(Error::Eigen(format!(
                "Lanczos did not converge {count} eigenpairs within a basis of {size} vectors"
            )));
        }
    }
}

fn rayleigh_ritz(
    k: &CsrMatrix,
    m: &CsrMatrix,
    basis: &Basis,
    count: usize,
    tol: f64,
) -> Result<Option<(Vec<f64>, Vec<Vec<f64>>)>> {
    let size = basis.q.len();
    let mut kr = Array2::zeros((size, size));
    for i in 0..size {
        for j in 0..=i {
            let v = 0.5 * (dot(&basis.q[i], &basis.kq[j]) + dot(&basis.q[j], &basis.kq[i]));
            kr[[i, j]] = v;
            kr[[j, i]] = v;
        }
    }
    let (theta, y) = symmetric_eigh(&kr)?;
    let n = k.dim();
    let ritz = |j: usize| -> Vec<f64> {
        let mut x = vec![0.0; n];
        for i in 0..size {
            let c = y[[i, j]];
            for (xv, qv) in x.iter_mut().zip(&basis.q[i]) {
                *xv += c * qv;
            }
        }
        x
    };
    let k_norm = k.norm_inf();
    let m_norm = m.norm_inf();
    let mut vectors = Vec::with_capacity(count);
    for j in 0..count {
        let x = ritz(j);
        let kx = k.matvec(&x);
        let mx = m.matvec(&x);
        let r: Vec<f64> = kx.iter().zip(&mx).map(|(a, b)| a - theta[j] * b).collect();
        if norm(&r) > tol * (k_norm + theta[j].abs() * m_norm) * norm(&x) {
            return Ok(None);
        }
        vectors.push(x);
    }
    // inertia check at a cut between the last wanted value and the next distinct Ritz value
    let last = theta[count - 1];
    let gap = theta.iter().skip(count).copied().find(|&t| t > last * (1.0 + 1e-6) + 1e-300);
    let cut = match gap {
        Some(t) => 0.5 * (last + t),
        None => last * (1.0 + 1e-6) + 1e-300,
    };
    let expected = theta.iter().filter(|&&t| t < cut).count();
    let below = EnvelopeLdlt::factorize(&k.linear_combination(1.0, m, -cut))?.negative_pivots();
    if below != expected {
        return Ok(None);
    }
    Ok(Some((theta[..count].to_vec(), vectors)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_lowest_eigenvalues_of_spring_chain() {
        // fixed-fixed chain of unit springs and masses: w_j = 4 sin^2(j pi / (2(n+1)))
        let n = 200;
        let mut kt = Vec::new();
        let mut mt = Vec::new();
        for i in 0..n {
            kt.push((i, i, 2.0));
            mt.push((i, i, 1.0));
            if i + 1 < n {
                kt.push((i, i + 1, -1.0));
                kt.push((i + 1, i, -1.0));
            }
        }
        let k = CsrMatrix::from_triplets(n, &kt);
        let m = CsrMatrix::from_triplets(n, &mt);
        let (w, v) = shift_invert_lanczos(&k, &m, 8, &LanczosOptions::default()).unwrap();
        for (j, wj) in w.iter().enumerate() {
            let exact = 4.0 * (std::f64::consts::PI * (j + 1) as f64 / (2.0 * (n as f64 + 1.0))).sin().powi(2);
            assert!((wj - exact).abs() < 1e-10 * exact.max(1e-3), "{j}: {wj} vs {exact}");
            assert!((m.bilinear(&v[j], &v[j]) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn resolves_repeated_eigenvalues() {
        // two identical uncoupled chains: every eigenvalue is double
        let half = 60;
        let n = 2 * half;
        let mut kt = Vec::new();
        let mut mt = Vec::new();
        for c in 0..2 {
            for i in 0..half {
                let g = c * half + i;
                kt.push((g, g, 2.0));
                mt.push((g, g, 1.0));
                if i + 1 < half {
                    kt.push((g, g + 1, -1.0));
                    kt.push((g + 1, g, -1.0));
                }
            }
        }
        let k = CsrMatrix::from_triplets(n, &kt);
        let m = CsrMatrix::from_triplets(n, &mt);
        let (w, _) = shift_invert_lanczos(&k, &m, 6, &LanczosOptions::default()).unwrap();
        for p in 0..3 {
            assert!((w[2 * p] - w[2 * p + 1]).abs() < 1e-10 * w[2 * p]);
        }
    }
}
