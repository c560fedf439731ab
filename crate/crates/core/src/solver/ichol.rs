//! Zero-fill incomplete Cholesky factorization.
//!
//! `ichol_factor(A)` computes a lower-triangular `L` with the sparsity of the
//! lower triangle of `A` such that `L L^T ~ A` on that pattern. The factor is
//! used as a constant preconditioner for the least-squares eigensolves; the
//! up-Laplacian is singular, so breakdown is expected and handled by retrying
//! with a growing diagonal shift.

use alloc::vec;
use alloc::vec::Vec;

use crate::sparse::CsrMatrix;

/// Lower-triangular incomplete Cholesky factor in CSR form.
#[derive(Debug, Clone)]
pub struct IcholFactor {
    l: CsrMatrix,
    /// Diagonal shift that was actually applied before factorization.
    pub shift: f64,
}

/// All shift retries hit a non-positive pivot.
#[derive(Debug, Clone, PartialEq)]
pub struct BreakdownNegativePivot {
    pub attempts: usize,
    pub last_shift: f64,
}

impl core::fmt::Display for BreakdownNegativePivot {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(
            f,
            "incomplete Cholesky broke down after {} attempts (last shift {:e})",
            self.attempts, self.last_shift
        )
    }
}

impl core::error::Error for BreakdownNegativePivot {}

/// IC(0) of a symmetric matrix.
///
/// The unshifted matrix is tried first so that matrices whose pattern admits
/// an exact factor (diagonal, tridiagonal) are reproduced exactly; on a
/// non-positive pivot the diagonal is shifted by `1e-8 * trace(A)/n`, growing
/// tenfold per retry (three shifted retries).
pub fn ichol_factor(a: &CsrMatrix) -> Result<IcholFactor, BreakdownNegativePivot> {
    assert_eq!(a.nrows(), a.ncols());
    let n = a.nrows();
    let base_shift =
        if n > 0 { 1e-8 * a.trace().abs().max(f64::MIN_POSITIVE) / n as f64 } else { 0.0 };

    let mut shift = 0.0;
    let mut attempts = 0;
    loop {
        attempts += 1;
        match try_factor(a, shift) {
            Some(l) => return Ok(IcholFactor { l, shift }),
            None => {
                if attempts > 4 {
                    return Err(BreakdownNegativePivot { attempts, last_shift: shift });
                }
                shift = if shift == 0.0 { base_shift } else { shift * 10.0 };
            }
        }
    }
}

fn try_factor(a: &CsrMatrix, shift: f64) -> Option<CsrMatrix> {
    let shifted = if shift == 0.0 { a.clone() } else { a.add_diagonal(shift) };
    let pattern = shifted.lower_triangle();
    let n = pattern.nrows();

    // Left-looking IC(0); finished rows accumulate in `rows`, each ending
    // with its diagonal entry.
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for i in 0..n {
        let (cols, vals) = pattern.row(i);
        for (&j, &aij) in cols.iter().zip(vals) {
            if j < i {
                // L[i][j] = (A[i][j] - <L[i, :j], L[j, :j]>) / L[j][j]
                let dot = sparse_row_dot(&rows[i], &rows[j], j);
                let &(jc, ljj) = rows[j].last()?;
                debug_assert_eq!(jc, j);
                if ljj == 0.0 {
                    return None;
                }
                rows[i].push((j, (aij - dot) / ljj));
            } else if j == i {
                let sum: f64 = rows[i].iter().map(|&(_, v)| v * v).sum();
                let piv = aij - sum;
                if piv <= 0.0 || !piv.is_finite() {
                    return None;
                }
                rows[i].push((i, libm::sqrt(piv)));
            }
        }
        // A structurally empty diagonal (all-zero row, unshifted) is a
        // breakdown; the shift retry inserts it.
        if rows[i].last().map(|&(c, _)| c) != Some(i) {
            return None;
        }
    }

    let mut triplets = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        for &(j, v) in row {
            triplets.push((i, j, v));
        }
    }
    Some(CsrMatrix::from_triplets(n, n, &triplets))
}

/// Dot product of two sparse rows restricted to columns `< limit`.
fn sparse_row_dot(a: &[(usize, f64)], b: &[(usize, f64)], limit: usize) -> f64 {
    let mut acc = 0.0;
    let (mut p, mut q) = (0, 0);
    while p < a.len() && q < b.len() {
        let (ca, va) = a[p];
        let (cb, vb) = b[q];
        if ca >= limit || cb >= limit {
            break;
        }
        match ca.cmp(&cb) {
            core::cmp::Ordering::Less => p += 1,
            core::cmp::Ordering::Greater => q += 1,
            core::cmp::Ordering::Equal => {
                acc += va * vb;
                p += 1;
                q += 1;
            }
        }
    }
    acc
}

impl IcholFactor {
    pub fn matrix(&self) -> &CsrMatrix {
        &self.l
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    /// Solve `L y = b`.
    pub fn forward_solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        debug_assert_eq!(b.len(), n);
        let mut y = vec![0.0; n];
        for i in 0..n {
            let (cols, vals) = self.l.row(i);
            let mut acc = b[i];
            let mut diag = 1.0;
            for (&j, &v) in cols.iter().zip(vals) {
                if j < i {
                    acc -= v * y[j];
                } else {
                    diag = v;
                }
            }
            y[i] = acc / diag;
        }
        y
    }

    /// Solve `L^T x = b`.
    pub fn transpose_solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        debug_assert_eq!(b.len(), n);
        let mut x = b.to_vec();
        for i in (0..n).rev() {
            let (cols, vals) = self.l.row(i);
            let diag = *vals.last().expect("diagonal present");
            debug_assert_eq!(*cols.last().unwrap(), i);
            x[i] /= diag;
            let xi = x[i];
            for (&j, &v) in cols.iter().zip(vals) {
                if j < i {
                    x[j] -= v * xi;
                }
            }
        }
        x
    }

    /// Apply `(L L^T)^{-1}`.
    pub fn apply_inverse(&self, b: &[f64]) -> Vec<f64> {
        self.transpose_solve(&self.forward_solve(b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_matrix_is_factored_exactly() {
        let a = CsrMatrix::from_triplets(3, 3, &[(0, 0, 4.0), (1, 1, 9.0), (2, 2, 16.0)]);
        let f = ichol_factor(&a).unwrap();
        assert_eq!(f.shift, 0.0);
        assert_eq!(f.matrix().get(0, 0), 2.0);
        assert_eq!(f.matrix().get(1, 1), 3.0);
        assert_eq!(f.matrix().get(2, 2), 4.0);
    }

    #[test]
    fn tridiagonal_toeplitz_has_no_fill() {
        // Toeplitz(-1, 2, -1), n = 10: the exact Cholesky factor is bidiagonal,
        // so IC(0) reproduces A exactly.
        let n = 10;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        let a = CsrMatrix::from_triplets(n, n, &t);
        let f = ichol_factor(&a).unwrap();
        assert_eq!(f.shift, 0.0);
        let l = f.matrix();
        let prod = l.matmul(&l.transpose());
        for i in 0..n {
            for j in 0..n {
                assert!((prod.get(i, j) - a.get(i, j)).abs() < 1e-12, "({i},{j})");
            }
        }
    }

    #[test]
    fn triangular_solves_invert_the_factor() {
        let n = 6;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 3.0 + i as f64));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        let a = CsrMatrix::from_triplets(n, n, &t);
        let f = ichol_factor(&a).unwrap();
        let b: Vec<f64> = (0..n).map(|i| (i as f64) - 2.0).collect();
        let x = f.apply_inverse(&b);
        // L L^T x should reproduce b.
        let l = f.matrix();
        let ltx = l.transpose().apply(&x);
        let back = l.apply(&ltx);
        for i in 0..n {
            assert!((back[i] - b[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn singular_matrix_falls_back_to_shift() {
        // Zero row forces the shifted retry.
        let a = CsrMatrix::from_triplets(3, 3, &[(0, 0, 2.0), (1, 1, 1.0)]);
        let f = ichol_factor(&a).unwrap();
        assert!(f.shift > 0.0);
        assert!(f.matrix().get(2, 2) > 0.0);
    }
}
