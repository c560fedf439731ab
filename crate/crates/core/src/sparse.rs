//! Minimal compressed sparse row matrices and the few dense-vector kernels the
//! solvers need.
//!
//! The flow only ever multiplies, transposes and assembles products of very
//! sparse boundary operators, so a small hand-rolled CSR type keeps the crate
//! `no_std` and dependency-free. Column indices are kept sorted within each
//! row.

use alloc::vec;
use alloc::vec::Vec;

/// Sparse matrix in CSR form with `f64` values.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Build from triplets; duplicate entries are summed, exact zeros dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        sorted.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));

        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(sorted.len());
        let mut values = Vec::with_capacity(sorted.len());

        let mut it = sorted.into_iter().peekable();
        while let Some((r, c, mut v)) = it.next() {
            assert!(r < nrows && c < ncols, "triplet out of bounds");
            while let Some(&(r2, c2, v2)) = it.peek() {
                if r2 == r && c2 == c {
                    v += v2;
                    it.next();
                } else {
                    break;
                }
            }
            if v != 0.0 {
                indptr[r + 1] += 1;
                indices.push(c);
                values.push(v);
            }
        }
        for r in 0..nrows {
            indptr[r + 1] += indptr[r];
        }
        Self { nrows, ncols, indptr, indices, values }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, indptr: vec![0; nrows + 1], indices: Vec::new(), values: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        let triplets: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
        Self::from_triplets(n, n, &triplets)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let lo = self.indptr[r];
        let hi = self.indptr[r + 1];
        (&self.indices[lo..hi], &self.values[lo..hi])
    }

    /// Entry lookup by binary search within the row.
    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    /// Iterate over `(row, col, value)` of all stored entries.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals.iter()).map(move |(&c, &v)| (r, c, v))
        })
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            let mut acc = 0.0;
            for (&c, &v) in cols.iter().zip(vals) {
                acc += v * x[c];
            }
            y[r] = acc;
        }
    }

    /// `y = A^T x` via row-wise scatter.
    pub fn matvec_transpose(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.nrows);
        debug_assert_eq!(y.len(), self.ncols);
        y.fill(0.0);
        for r in 0..self.nrows {
            let xr = x[r];
            if xr == 0.0 {
                continue;
            }
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                y[c] += v * xr;
            }
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.matvec(x, &mut y);
        y
    }

    pub fn apply_transpose(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.ncols];
        self.matvec_transpose(x, &mut y);
        y
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut triplets = Vec::with_capacity(self.nnz());
        for (r, c, v) in self.iter() {
            triplets.push((c, r, v));
        }
        CsrMatrix::from_triplets(self.ncols, self.nrows, &triplets)
    }

    /// Sparse product `A * B` (Gustavson's row-by-row scheme).
    pub fn matmul(&self, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.ncols, other.nrows, "matmul shape mismatch");
        let mut indptr = Vec::with_capacity(self.nrows + 1);
        indptr.push(0usize);
        let mut indices = Vec::new();
        let mut values = Vec::new();

        let mut accum = vec![0.0f64; other.ncols];
        let mut marker = vec![usize::MAX; other.ncols];
        let mut row_cols: Vec<usize> = Vec::new();

        for r in 0..self.nrows {
            row_cols.clear();
            let (acols, avals) = self.row(r);
            for (&k, &av) in acols.iter().zip(avals) {
                let (bcols, bvals) = other.row(k);
                for (&c, &bv) in bcols.iter().zip(bvals) {
                    if marker[c] != r {
                        marker[c] = r;
                        accum[c] = 0.0;
                        row_cols.push(c);
                    }
                    accum[c] += av * bv;
                }
            }
            row_cols.sort_unstable();
            for &c in &row_cols {
                if accum[c] != 0.0 {
                    indices.push(c);
                    values.push(accum[c]);
                }
            }
            indptr.push(indices.len());
        }
        CsrMatrix { nrows: self.nrows, ncols: other.ncols, indptr, indices, values }
    }

    /// `Diag(left) * A * Diag(right)` without changing the sparsity pattern.
    pub fn scale_both(&self, left: &[f64], right: &[f64]) -> CsrMatrix {
        debug_assert_eq!(left.len(), self.nrows);
        debug_assert_eq!(right.len(), self.ncols);
        let mut out = self.clone();
        for r in 0..out.nrows {
            let lo = out.indptr[r];
            let hi = out.indptr[r + 1];
            for k in lo..hi {
                out.values[k] *= left[r] * right[out.indices[k]];
            }
        }
        out
    }

    /// Entrywise sum `A + B`.
    pub fn add(&self, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.nrows, other.nrows);
        assert_eq!(self.ncols, other.ncols);
        let mut triplets: Vec<(usize, usize, f64)> = self.iter().collect();
        triplets.extend(other.iter());
        CsrMatrix::from_triplets(self.nrows, self.ncols, &triplets)
    }

    /// Add `shift` to every diagonal entry (inserting missing diagonals).
    pub fn add_diagonal(&self, shift: f64) -> CsrMatrix {
        let mut triplets: Vec<(usize, usize, f64)> = self.iter().collect();
        let n = self.nrows.min(self.ncols);
        for i in 0..n {
            triplets.push((i, i, shift));
        }
        CsrMatrix::from_triplets(self.nrows, self.ncols, &triplets)
    }

    /// Lower triangle including the diagonal.
    pub fn lower_triangle(&self) -> CsrMatrix {
        let triplets: Vec<_> = self.iter().filter(|&(r, c, _)| c <= r).collect();
        CsrMatrix::from_triplets(self.nrows, self.ncols, &triplets)
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.values.iter().map(|v| v * v).sum())
    }

    /// Largest absolute entry; cheap spectral-scale proxy for tolerances.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let n = self.nrows.min(self.ncols);
        (0..n).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        self.diagonal().iter().sum()
    }

    /// Dense row-major copy; intended for small matrices and tests.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.nrows * self.ncols];
        for (r, c, v) in self.iter() {
            out[r * self.ncols + c] = v;
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Dense vector kernels.

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn nrm2(x: &[f64]) -> f64 {
    libm::sqrt(dot(x, x))
}

/// `y += alpha * x`.
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(alpha: f64, x: &mut [f64]) {
    for xi in x.iter_mut() {
        *xi *= alpha;
    }
}

/// Normalize to unit Euclidean norm; returns the original norm (0 if zero).
pub fn normalize(x: &mut [f64]) -> f64 {
    let n = nrm2(x);
    if n > 0.0 {
        scale(1.0 / n, x);
    }
    n
}
