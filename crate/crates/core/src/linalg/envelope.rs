//! Envelope (skyline) `L D L^T` factorisation after reverse Cuthill-McKee reordering.

use std::collections::VecDeque;

use super::sparse::CsrMatrix;
use crate::error::{Error, Result};

/// Reverse Cuthill-McKee ordering of the adjacency graph of `a`.
/// Returns `perm` with `perm[new] = old`.
pub fn rcm_ordering(a: &CsrMatrix) -> Vec<usize> {
    let n = a.dim();
    let degree: Vec<usize> = (0..n).map(|i| a.row(i).0.len()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let bfs_levels = |start: usize, seen: &mut Vec<bool>| -> Vec<Vec<usize>> {
        let mut levels = vec![vec![start]];
        seen[start] = true;
        loop {
            let mut next = Vec::new();
            for &v in levels.last().unwrap() {
                for &w in a.row(v).0 {
                    if !seen[w] {
                        seen[w] = true;
                        next.push(w);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            levels.push(next);
        }
        levels
    };
    while order.len() < n {
        // lowest-degree unvisited vertex seeds the component
        let seed = (0..n).filter(|&v| !visited[v]).min_by_key(|&v| (degree[v], v)).unwrap();
        // pseudo-peripheral start vertex (George-Liu)
        let mut start = seed;
        let mut depth = bfs_levels(start, &mut visited.clone());
        loop {
            let last = depth.last().unwrap();
            let cand = *last.iter().min_by_key(|&&v| (degree[v], v)).unwrap();
            let cand_depth = bfs_levels(cand, &mut visited.clone());
            if cand_depth.len() > depth.len() {
                start = cand;
                depth = cand_depth;
            } else {
                break;
            }
        }
        let mut queue = VecDeque::new();
        visited[start] = true;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nb: Vec<usize> = a.row(v).0.iter().copied().filter(|&w| !visited[w]).collect();
            nb.sort_unstable_by_key(|&w| (degree[w], w));
            for w in nb {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// `P A P^T = L D L^T` with unit lower-triangular `L` stored row-wise inside its envelope.
#[derive(Clone, Debug)]
pub struct EnvelopeLdlt {
    perm: Vec<usize>,
    first: Vec<usize>,
    start: Vec<usize>,
    l: Vec<f64>,
    d: Vec<f64>,
}

/// Number of stored lower-triangle entries and estimated factorisation flops for `perm`.
pub fn envelope_cost(a: &CsrMatrix, perm: &[usize]) -> (usize, f64) {
    let n = a.dim();
    let mut inv = vec![0; n];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    let mut size = 0usize;
    let mut flops = 0.0;
    for (i, &old) in perm.iter().enumerate() {
        let f = a.row(old).0.iter().map(|&j| inv[j]).filter(|&j| j <= i).min().unwrap_or(i);
        let len = i - f;
        size += len + 1;
        flops += (len * len) as f64;
    }
    (size, flops)
}

impl EnvelopeLdlt {
    pub fn factorize(a: &CsrMatrix) -> Result<Self> {
        Self::factorize_with_order(a, rcm_ordering(a))
    }

    pub fn factorize_with_order(a: &CsrMatrix, perm: Vec<usize>) -> Result<Self> {
        let n = a.dim();
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first = vec![0; n];
        let mut start = vec![0; n + 1];
        for (i, &old) in perm.iter().enumerate() {
            first[i] = a.row(old).0.iter().map(|&j| inv[j]).filter(|&j| j <= i).min().unwrap_or(i);
            start[i + 1] = start[i] + (i - first[i]);
        }
        let mut l = vec![0.0; start[n]];
        let mut d = vec![0.0; n];
        let mut w = Vec::new();
        let scale = a.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..n {
            let fi = first[i];
            let len = i - fi;
            w.clear();
            w.resize(len, 0.0);
            let mut diag = 0.0;
            let (cols, vals) = a.row(perm[i]);
            for (&j, &v) in cols.iter().zip(vals) {
                let jn = inv[j];
                if jn < i {
                    w[jn - fi] = v;
                } else if jn == i {
                    diag = v;
                }
            }
            // w_j = a_ij - sum_k w_k L_jk (k < j), then L_ij = w_j / d_j
            for j in fi..i {
                let fj = first[j];
                let lo = fi.max(fj);
                if lo < j {
                    let lj = &l[start[j] + (lo - fj)..start[j] + (j - fj)];
                    let wi = &w[lo - fi..j - fi];
                    let s: f64 = wi.iter().zip(lj).map(|(x, y)| x * y).sum();
                    w[j - fi] -= s;
                }
            }
            let row = &mut l[start[i]..start[i + 1]];
            for (k, j) in (fi..i).enumerate() {
                let lij = w[k] / d[j];
                diag -= w[k] * lij;
                row[k] = lij;
            }
            if !(diag.abs() > 1e-14 * scale) || !diag.is_finite() {
                return Err(Error::Singular(perm[i]));
            }
            d[i] = diag;
        }
        Ok(EnvelopeLdlt { perm, first, start, l, d })
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }

    /// Count of negative pivots, i.e. the number of negative eigenvalues (Sylvester).
    pub fn negative_pivots(&self) -> usize {
        self.d.iter().filter(|&&v| v < 0.0).count()
    }

    pub fn envelope_size(&self) -> usize {
        self.l.len() + self.d.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut z: Vec<f64> = self.perm.iter().map(|&o| b[o]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.l[self.start[i]..self.start[i + 1]];
            let s: f64 = row.iter().zip(&z[fi..i]).map(|(a, b)| a * b).sum();
            z[i] -= s;
        }
        for (zi, di) in z.iter_mut().zip(&self.d) {
            *zi /= di;
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let zi = z[i];
            let row = &self.l[self.start[i]..self.start[i + 1]];
            for (k, lv) in row.iter().enumerate() {
                z[fi + k] -= lv * zi;
            }
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = z[new];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_2d(m: usize, shift: f64) -> CsrMatrix {
        let n = m * m;
        let mut t = Vec::new();
        for i in 0..m {
            for j in 0..m {
                let k = i * m + j;
                t.push((k, k, 4.0 + shift));
                if i + 1 < m {
                    t.push((k, k + m, -1.0));
                    t.push((k + m, k, -1.0));
                }
                if j + 1 < m {
                    t.push((k, k + 1, -1.0));
                    t.push((k + 1, k, -1.0));
                }
            }
        }
        CsrMatrix::from_triplets(n, &t)
    }

    #[test]
    fn solves_spd_system() {
        let a = laplacian_2d(9, 0.0);
        let f = EnvelopeLdlt::factorize(&a).unwrap();
        let x_true: Vec<f64> = (0..81).map(|i| (i as f64 * 0.37).sin()).collect();
        let b = a.matvec(&x_true);
        let x = f.solve(&b);
        let err = x.iter().zip(&x_true).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
        assert_eq!(f.negative_pivots(), 0);
    }

    #[test]
    fn inertia_counts_negative_eigenvalues() {
        // eigenvalues of the 2D Laplacian are 4 - 2cos(a) - 2cos(b); shifting by -2
        // leaves exactly the modes with 2cos(a) + 2cos(b) > 2 negative
        let m = 6;
        let a = laplacian_2d(m, -2.0);
        let f = EnvelopeLdlt::factorize(&a).unwrap();
        let mut count = 0;
        for p in 1..=m {
            for q in 1..=m {
                let th = |k: usize| std::f64::consts::PI * k as f64 / (m as f64 + 1.0);
                let ev = 2.0 - 2.0 * th(p).cos() - 2.0 * th(q).cos();
                if ev < 0.0 {
                    count += 1;
                }
            }
        }
        assert_eq!(f.negative_pivots(), count);
    }

    #[test]
    fn rcm_reduces_profile_of_scrambled_band() {
        let a = laplacian_2d(12, 0.0);
        let natural: Vec<usize> = (0..a.dim()).collect();
        let (nat, _) = envelope_cost(&a, &natural);
        let (rcm, _) = envelope_cost(&a, &rcm_ordering(&a));
        assert!(rcm <= nat, "{rcm} > {nat}");
    }
}
