use ndarray::Array2;

/// Compressed sparse row matrix holding both triangles of a symmetric operator.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Zero matrix with the given (unsorted, possibly repeated) column lists per row.
    pub fn from_row_pattern(n: usize, rows: Vec<Vec<usize>>) -> Self {
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        row_ptr.push(0);
        for mut r in rows {
            r.sort_unstable();
            r.dedup();
            cols.extend(r);
            row_ptr.push(cols.len());
        }
        let values = vec![0.0; cols.len()];
        CsrMatrix { n, row_ptr, cols, values }
    }

    /// Matrix from `(row, col, value)` triplets; duplicates are summed in input order.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows = vec![Vec::new(); n];
        for &(i, j, _) in triplets {
            rows[i].push(j);
        }
        let mut m = Self::from_row_pattern(n, rows);
        for &(i, j, v) in triplets {
            let p = m.position(i, j).expect("pattern entry");
            m.values[p] += v;
        }
        m
    }

    pub fn from_dense(a: &Array2<f64>) -> Self {
        let n = a.nrows();
        let mut trip = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if a[[i, j]] != 0.0 {
                    trip.push((i, j, a[[i, j]]));
                }
            }
        }
        Self::from_triplets(n, &trip)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.cols[a..b], &self.values[a..b])
    }

    fn position(&self, i: usize, j: usize) -> Option<usize> {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.cols[a..b].binary_search(&j).ok().map(|p| a + p)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map_or(0.0, |p| self.values[p])
    }

    /// Add a dense element block; `dofs[k] == usize::MAX` marks an eliminated dof.
    pub fn add_element_matrix(&mut self, dofs: &[usize], block: &[f64]) {
        let nd = dofs.len();
        for (a, &i) in dofs.iter().enumerate() {
            if i == usize::MAX {
                continue;
            }
            let (start, end) = (self.row_ptr[i], self.row_ptr[i + 1]);
            let row_cols = &self.cols[start..end];
            for (b, &j) in dofs.iter().enumerate() {
                if j == usize::MAX {
                    continue;
                }
                let p = start + row_cols.binary_search(&j).expect("entry in pattern");
                self.values[p] += block[a * nd + b];
            }
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n, "matvec dimension");
        (0..self.n)
            .map(|i| {
                let (c, v) = self.row(i);
                c.iter().zip(v).map(|(&j, a)| a * x[j]).sum()
            })
            .collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `||A - A^T||_F / ||A||_F`.
    pub fn symmetry_defect(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            let (c, v) = self.row(i);
            for (&j, a) in c.iter().zip(v) {
                let d = a - self.get(j, i);
                acc += d * d;
            }
        }
        acc.sqrt() / self.frobenius_norm().max(f64::MIN_POSITIVE)
    }

    /// Largest absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n).map(|i| self.row(i).1.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    /// `a * self + b * other` (union of the two sparsity patterns).
    pub fn linear_combination(&self, a: f64, other: &CsrMatrix, b: f64) -> CsrMatrix {
        assert_eq!(self.n, other.n, "dimension mismatch");
        if self.row_ptr == other.row_ptr && self.cols == other.cols {
            let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
            return CsrMatrix { values, ..self.clone() };
        }
        let mut trip = Vec::with_capacity(self.values.len() + other.values.len());
        for (m, s) in [(self, a), (other, b)] {
            for i in 0..m.n {
                let (cols, vals) = m.row(i);
                trip.extend(cols.iter().zip(vals).map(|(&j, &v)| (i, j, s * v)));
            }
        }
        CsrMatrix::from_triplets(self.n, &trip)
    }

    /// Principal submatrix on the index list `idx` (in that order).
    pub fn principal_submatrix(&self, idx: &[usize]) -> CsrMatrix {
        let mut map = vec![usize::MAX; self.n];
        for (k, &i) in idx.iter().enumerate() {
            map[i] = k;
        }
        let mut row_ptr = Vec::with_capacity(idx.len() + 1);
        let mut cols = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for &i in idx {
            let (c, v) = self.row(i);
            let mut entries: Vec<(usize, f64)> =
                c.iter().zip(v).filter(|(&j, _)| map[j] != usize::MAX).map(|(&j, &a)| (map[j], a)).collect();
            entries.sort_unstable_by_key(|e| e.0);
            for (j, a) in entries {
                cols.push(j);
                values.push(a);
            }
            row_ptr.push(cols.len());
        }
        CsrMatrix { n: idx.len(), row_ptr, cols, values }
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut a = Array2::zeros((self.n, self.n));
        for i in 0..self.n {
            let (c, v) = self.row(i);
            for (&j, x) in c.iter().zip(v) {
                a[[i, j]] = *x;
            }
        }
        a
    }

    /// `x^T A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(x, &self.matvec(y))
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_and_submatrix() {
        let m = CsrMatrix::from_triplets(3, &[(0, 0, 1.0), (0, 0, 1.0), (1, 2, 3.0), (2, 1, 3.0), (2, 2, 5.0)]);
        assert_eq!(m.get(0, 0), 2.0);
        assert_eq!(m.matvec(&[1.0, 1.0, 1.0]), vec![2.0, 3.0, 8.0]);
        assert_eq!(m.symmetry_defect(), 0.0);
        let s = m.principal_submatrix(&[2, 1]);
        assert_eq!(s.to_dense(), ndarray::array![[5.0, 3.0], [3.0, 0.0]]);
    }
}
