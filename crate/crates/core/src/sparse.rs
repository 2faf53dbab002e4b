//! Column-compressed complex matrices, just enough for the truncated representations.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use num_traits::Zero;

/// A square-or-rectangular sparse matrix stored by columns.
///
/// Each column holds `(row, value)` pairs sorted by row with no explicit zeros.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: Vec<Vec<(usize, Complex64)>>,
}

fn compress(mut entries: Vec<(usize, Complex64)>) -> Vec<(usize, Complex64)> {
    entries.sort_by_key(|&(r, _)| r);
    let mut out: Vec<(usize, Complex64)> = Vec::with_capacity(entries.len());
    for (r, v) in entries {
        match out.last_mut() {
            Some((last, acc)) if *last == r => *acc += v,
            _ => out.push((r, v)),
        }
    }
    out.retain(|(_, v)| !v.is_zero());
    out
}

impl SparseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        SparseMatrix { rows, cols: vec![Vec::new(); cols] }
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix { rows: n, cols: (0..n).map(|i| vec![(i, Complex64::new(1.0, 0.0))]).collect() }
    }

    /// Builds a matrix from arbitrary columns; duplicate rows are summed.
    pub fn from_columns(rows: usize, cols: Vec<Vec<(usize, Complex64)>>) -> Self {
        let cols = cols
            .into_iter()
            .map(|c| {
                debug_assert!(c.iter().all(|&(r, _)| r < rows));
                compress(c)
            })
            .collect();
        SparseMatrix { rows, cols }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols.len()
    }

    pub fn nnz(&self) -> usize {
        self.cols.iter().map(Vec::len).sum()
    }

    pub fn column(&self, j: usize) -> &[(usize, Complex64)] {
        &self.cols[j]
    }

    /// All non-zero entries as `(row, col, value)`, column-major.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        self.cols.iter().enumerate().flat_map(|(j, c)| c.iter().map(move |&(i, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.cols[j].binary_search_by_key(&i, |&(r, _)| r).map_or(Complex64::zero(), |k| self.cols[j][k].1)
    }

    /// `self * v` for a sparse vector.
    pub fn apply_sparse(&self, v: &[(usize, Complex64)]) -> Vec<(usize, Complex64)> {
        let mut acc = Vec::new();
        for &(j, x) in v {
            acc.extend(self.cols[j].iter().map(|&(i, a)| (i, a * x)));
        }
        compress(acc)
    }

    /// `self * v` for a dense vector.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.ncols(), "dimension mismatch");
        let mut out = vec![Complex64::zero(); self.rows];
        for (c, &x) in self.cols.iter().zip(v) {
            if x.is_zero() {
                continue;
            }
            for &(i, a) in c {
                out[i] += a * x;
            }
        }
        out
    }

    pub fn mul(&self, rhs: &SparseMatrix) -> SparseMatrix {
        assert_eq!(self.ncols(), rhs.nrows(), "dimension mismatch");
        SparseMatrix { rows: self.rows, cols: rhs.cols.iter().map(|c| self.apply_sparse(c)).collect() }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> SparseMatrix {
        let mut cols = vec![Vec::new(); self.rows];
        for (j, c) in self.cols.iter().enumerate() {
            for &(i, v) in c {
                cols[i].push((j, v.conj()));
            }
        }
        // rows were visited in increasing column order, so each new column is sorted
        SparseMatrix { rows: self.ncols(), cols }
    }

    fn combine(&self, rhs: &SparseMatrix, sign: f64) -> SparseMatrix {
        assert!(self.rows == rhs.rows && self.ncols() == rhs.ncols(), "dimension mismatch");
        let cols = self
            .cols
            .iter()
            .zip(&rhs.cols)
            .map(|(a, b)| compress(a.iter().copied().chain(b.iter().map(|&(i, v)| (i, v * sign))).collect()))
            .collect();
        SparseMatrix { rows: self.rows, cols }
    }

    pub fn add(&self, rhs: &SparseMatrix) -> SparseMatrix {
        self.combine(rhs, 1.0)
    }

    pub fn sub(&self, rhs: &SparseMatrix) -> SparseMatrix {
        self.combine(rhs, -1.0)
    }

    pub fn scale(&self, s: Complex64) -> SparseMatrix {
        let cols = self.cols.iter().map(|c| compress(c.iter().map(|&(i, v)| (i, v * s)).collect())).collect();
        SparseMatrix { rows: self.rows, cols }
    }

    pub fn pow(&self, n: u64) -> SparseMatrix {
        assert_eq!(self.rows, self.ncols(), "power of a non-square matrix");
        let mut out = SparseMatrix::identity(self.rows);
        for _ in 0..n {
            out = self.mul(&out);
        }
        out
    }

    /// Euclidean norm of column `j`.
    pub fn column_norm(&self, j: usize) -> f64 {
        libm::sqrt(self.cols[j].iter().map(|(_, v)| v.norm_sqr()).sum())
    }
}
