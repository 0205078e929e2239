//! Small dense and sparse linear-algebra helpers.

use faer::sparse::{SparseColMat, SymbolicSparseColMat};
use faer::Mat;

/// Least-squares solution of `a x = b` (column by column) via Householder QR.
pub fn lstsq(a: &Mat<f64>, b: &Mat<f64>) -> Mat<f64> {
    use faer::solvers::SpSolverLstsq;
    a.qr().solve_lstsq(b)
}

/// Solves the square system `a x = b` with partial-pivoting LU.
pub fn lu_solve(a: &Mat<f64>, b: &Mat<f64>) -> Mat<f64> {
    use faer::solvers::SpSolver;
    a.partial_piv_lu().solve(b)
}

pub fn mat_from_rows(rows: &[Vec<f64>]) -> Mat<f64> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    Mat::from_fn(n, m, |i, j| rows[i][j])
}

/// Square sparse matrix in compressed-row form with a fixed pattern.
///
/// Column indices in each row are sorted. Symmetric matrices are stored in
/// full, so the same arrays also describe the transpose in compressed-column
/// form.
#[derive(Clone, Debug)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a zero matrix with the given per-row (sorted, unique) pattern.
    pub fn from_pattern(rows: Vec<Vec<usize>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let nnz: usize = rows.iter().map(Vec::len).sum();
        let mut col_idx = Vec::with_capacity(nnz);
        for r in rows {
            debug_assert!(r.windows(2).all(|w| w[0] < w[1]));
            col_idx.extend(r);
            row_ptr.push(col_idx.len());
        }
        CsrMatrix {
            n,
            row_ptr,
            col_idx,
            values: vec![0.0; nnz],
        }
    }

    /// Dense-to-sparse conversion keeping exact zeros out of the pattern.
    pub fn from_dense(a: &Mat<f64>) -> Self {
        assert_eq!(a.nrows(), a.ncols());
        let n = a.nrows();
        let rows = (0..n)
            .map(|i| (0..n).filter(|&j| a.read(i, j) != 0.0).collect())
            .collect();
        let mut m = Self::from_pattern(rows);
        for i in 0..n {
            for j in 0..n {
                let v = a.read(i, j);
                if v != 0.0 {
                    m.add(i, j, v);
                }
            }
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    fn position(&self, i: usize, j: usize) -> Option<usize> {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        self.col_idx[lo..hi].binary_search(&j).ok().map(|k| lo + k)
    }

    /// Adds `v` to entry `(i, j)`. Panics if `(i, j)` is outside the pattern.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self
            .position(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) not in sparsity pattern"));
        self.values[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map_or(0.0, |k| self.values[k])
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        self.col_idx[lo..hi]
            .iter()
            .copied()
            .zip(self.values[lo..hi].iter().copied())
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    /// `b - A x` with compensated (error-free transformation) dot
    /// products, accurate to about one rounding of the result even when
    /// the products cancel heavily.
    pub fn residual(&self, b: &[f64], x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let mut acc = CompensatedSum::new(b[i]);
                for (j, v) in self.row(i) {
                    acc.add_product(-v, x[j]);
                }
                acc.value()
            })
            .collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |A - A^T|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Compressed-column view of the transpose (equal to `self` when
    /// symmetric).
    pub fn to_faer_transpose(&self) -> SparseColMat<usize, f64> {
        let symbolic = SymbolicSparseColMat::new_checked(
            self.n,
            self.n,
            self.row_ptr.clone(),
            None,
            self.col_idx.clone(),
        );
        SparseColMat::new(symbolic, self.values.clone())
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut a = Mat::<f64>::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                a.write(i, j, v);
            }
        }
        a
    }
}

/// Sum with a running error term (TwoSum / FMA-based TwoProduct).
#[derive(Clone, Copy, Debug)]
pub struct CompensatedSum {
    sum: f64,
    err: f64,
}

impl CompensatedSum {
    pub fn new(start: f64) -> Self {
        CompensatedSum { sum: start, err: 0.0 }
    }

    #[inline]
    pub fn add(&mut self, v: f64) {
        let s = self.sum + v;
        let bp = s - self.sum;
        self.err += (self.sum - (s - bp)) + (v - bp);
        self.sum = s;
    }

    #[inline]
    pub fn add_product(&mut self, a: f64, b: f64) {
        let p = a * b;
        let e = a.mul_add(b, -p);
        self.add(p);
        self.err += e;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.err
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csr_add_and_matvec() {
        let mut m = CsrMatrix::from_pattern(vec![vec![0, 1], vec![0, 1]]);
        m.add(0, 0, 2.0);
        m.add(0, 1, 1.0);
        m.add(1, 0, 1.0);
        m.add(1, 1, 3.0);
        m.add(1, 1, 1.0);
        assert_eq!(m.matvec(&[1.0, 2.0]), vec![4.0, 9.0]);
        assert_eq!(m.asymmetry(), 0.0);
        assert_eq!(m.get(1, 1), 4.0);
    }

    #[test]
    #[should_panic]
    fn csr_add_outside_pattern_panics() {
        let mut m = CsrMatrix::from_pattern(vec![vec![0], vec![1]]);
        m.add(0, 1, 1.0);
    }

    #[test]
    fn compensated_residual_survives_cancellation() {
        let mut m = CsrMatrix::from_pattern(vec![vec![0, 1], vec![0, 1]]);
        m.add(0, 0, 1e16);
        m.add(0, 1, 1.0);
        m.add(1, 0, 1.0);
        m.add(1, 1, 1.0);
        // row 0: (1e16 + 2) - (1e16 + 1) = 1, but a plain product sum
        // rounds 1e16 + 1 to 1e16
        let r = m.residual(&[1e16 + 2.0, 2.0], &[1.0, 1.0]);
        assert_eq!(r, vec![1.0, 0.0]);
        let mut c = CompensatedSum::new(0.0);
        for v in [1e100, 1.0, -1e100] {
            c.add(v);
        }
        assert_eq!(c.value(), 1.0);
    }

    #[test]
    fn lstsq_exact_for_consistent_system() {
        let a = mat_from_rows(&[vec![1.0, 0.0], vec![1.0, 1.0], vec![1.0, 2.0]]);
        let b = mat_from_rows(&[vec![1.0], vec![3.0], vec![5.0]]);
        let x = lstsq(&a, &b);
        assert!((x.read(0, 0) - 1.0).abs() < 1e-13);
        assert!((x.read(1, 0) - 2.0).abs() < 1e-13);
    }
}
