//! Dense symmetric eigendecomposition.
//!
//! Householder reduction to tridiagonal form followed by the implicit-shift QL
//! iteration, with accumulation of the orthogonal transformations. This is the
//! reference ("dense mode") eigensolver: below the dense threshold the flow
//! uses it directly and the iterative path is checked against it.

use alloc::vec;
use alloc::vec::Vec;

use crate::sparse::CsrMatrix;

/// Full eigendecomposition of a symmetric matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub n: usize,
    /// Eigenvalues sorted ascending.
    pub values: Vec<f64>,
    /// Row-major `n x n`; column `j` is the eigenvector of `values[j]`.
    vectors: Vec<f64>,
}

impl SymEigen {
    pub fn eigenvector(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.vectors[i * self.n + j]).collect()
    }
}

/// QL failed to converge for some eigenvalue within the iteration cap.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NoConvergence;

impl core::fmt::Display for NoConvergence {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "QL iteration failed to converge")
    }
}

impl core::error::Error for NoConvergence {}

/// Eigendecomposition of a symmetric matrix given in row-major order.
///
/// Only the lower triangle is read; the input is copied.
pub fn sym_eigen(a: &[f64], n: usize) -> Result<SymEigen, NoConvergence> {
    assert_eq!(a.len(), n * n);
    if n == 0 {
        return Ok(SymEigen { n, values: Vec::new(), vectors: Vec::new() });
    }
    let mut z: Vec<f64> = a.to_vec();
    // Symmetrize from the lower triangle so tiny asymmetries cannot leak in.
    for i in 0..n {
        for j in 0..i {
            let v = z[i * n + j];
            z[j * n + i] = v;
        }
    }
    let mut d = vec![0.0f64; n];
    let mut e = vec![0.0f64; n];
    tred2(&mut z, n, &mut d, &mut e);
    tqli(&mut d, &mut e, n, &mut z)?;

    // Sort eigenpairs ascending.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&i, &j| d[i].partial_cmp(&d[j]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let mut vectors = vec![0.0f64; n * n];
    for (newj, &oldj) in order.iter().enumerate() {
        for i in 0..n {
            vectors[i * n + newj] = z[i * n + oldj];
        }
    }
    Ok(SymEigen { n, values, vectors })
}

/// Convenience wrapper densifying a (small) sparse symmetric matrix.
pub fn sym_eigen_csr(a: &CsrMatrix) -> Result<SymEigen, NoConvergence> {
    assert_eq!(a.nrows(), a.ncols());
    sym_eigen(&a.to_dense(), a.nrows())
}

/// Householder reduction of a real symmetric matrix to tridiagonal form,
/// accumulating the orthogonal transformation in `z`.
fn tred2(z: &mut [f64], n: usize, d: &mut [f64], e: &mut [f64]) {
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let scale: f64 = (0..=l).map(|k| z[i * n + k].abs()).sum();
            if scale == 0.0 {
                e[i] = z[i * n + l];
            } else {
                for k in 0..=l {
                    z[i * n + k] /= scale;
                    h += z[i * n + k] * z[i * n + k];
                }
                let f = z[i * n + l];
                let g = if f >= 0.0 { -libm::sqrt(h) } else { libm::sqrt(h) };
                e[i] = scale * g;
                h -= f * g;
                z[i * n + l] = f - g;
                let mut fsum = 0.0;
                for j in 0..=l {
                    z[j * n + i] = z[i * n + j] / h;
                    let mut g = 0.0;
                    for k in 0..=j {
                        g += z[j * n + k] * z[i * n + k];
                    }
                    for k in (j + 1)..=l {
                        g += z[k * n + j] * z[i * n + k];
                    }
                    e[j] = g / h;
                    fsum += e[j] * z[i * n + j];
                }
                let hh = fsum / (h + h);
                for j in 0..=l {
                    let f = z[i * n + j];
                    let gj = e[j] - hh * f;
                    e[j] = gj;
                    for k in 0..=j {
                        z[j * n + k] -= f * e[k] + gj * z[i * n + k];
                    }
                }
            }
        } else {
            e[i] = z[i * n + l];
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;
    for i in 0..n {
        if d[i] != 0.0 {
            for j in 0..i {
                let mut g = 0.0;
                for k in 0..i {
                    g += z[i * n + k] * z[k * n + j];
                }
                for k in 0..i {
                    z[k * n + j] -= g * z[k * n + i];
                }
            }
        }
        d[i] = z[i * n + i];
        z[i * n + i] = 1.0;
        for j in 0..i {
            z[j * n + i] = 0.0;
            z[i * n + j] = 0.0;
        }
    }
}

/// QL iteration with implicit shifts on a symmetric tridiagonal matrix,
/// rotating the accumulated transformation `z` alongside.
fn tqli(d: &mut [f64], e: &mut [f64], n: usize, z: &mut [f64]) -> Result<(), NoConvergence> {
    if n <= 1 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 50 {
                return Err(NoConvergence);
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = libm::hypot(g, 1.0);
            let sign_r = if g >= 0.0 { r.abs() } else { -r.abs() };
            g = d[m] - d[l] + e[l] / (g + sign_r);
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = libm::hypot(f, g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    f = z[k * n + i + 1];
                    z[k * n + i + 1] = s * z[k * n + i] + c * f;
                    z[k * n + i] = c * z[k * n + i] - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use crate::sparse;

    fn residual(a: &[f64], n: usize, eig: &SymEigen) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..n {
            let v = eig.eigenvector(j);
            let mut av = vec![0.0; n];
            for i in 0..n {
                for k in 0..n {
                    av[i] += a[i * n + k] * v[k];
                }
            }
            for i in 0..n {
                av[i] -= eig.values[j] * v[i];
            }
            worst = worst.max(sparse::nrm2(&av));
        }
        worst
    }

    #[test]
    fn diagonal_matrix() {
        let a = [3.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 2.0];
        let eig = sym_eigen(&a, 3).unwrap();
        assert!((eig.values[0] - 1.0).abs() < 1e-14);
        assert!((eig.values[1] - 2.0).abs() < 1e-14);
        assert!((eig.values[2] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn two_by_two_analytic() {
        // [[2,1],[1,2]] has eigenvalues 1 and 3.
        let a = [2.0, 1.0, 1.0, 2.0];
        let eig = sym_eigen(&a, 2).unwrap();
        assert!((eig.values[0] - 1.0).abs() < 1e-14);
        assert!((eig.values[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn path_graph_laplacian_spectrum() {
        // Path on n vertices: eigenvalues 2 - 2 cos(pi k / n), k = 0..n-1.
        let n = 7;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            let deg = if i == 0 || i == n - 1 { 1.0 } else { 2.0 };
            a[i * n + i] = deg;
            if i + 1 < n {
                a[i * n + i + 1] = -1.0;
                a[(i + 1) * n + i] = -1.0;
            }
        }
        let eig = sym_eigen(&a, n).unwrap();
        for k in 0..n {
            let expect = 2.0 - 2.0 * libm::cos(core::f64::consts::PI * k as f64 / n as f64);
            assert!((eig.values[k] - expect).abs() < 1e-12, "k={k}");
        }
        assert!(residual(&a, n, &eig) < 1e-12);
    }

    #[test]
    fn random_symmetric_residual_and_orthogonality() {
        let mut rng = SplitMix64::new(99);
        for trial in 0..5 {
            let n = 20 + 5 * trial;
            let mut a = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..=i {
                    let v = rng.next_range(-1.0, 1.0);
                    a[i * n + j] = v;
                    a[j * n + i] = v;
                }
            }
            let eig = sym_eigen(&a, n).unwrap();
            assert!(residual(&a, n, &eig) < 1e-11 * n as f64);
            for j in 0..n {
                let vj = eig.eigenvector(j);
                assert!((sparse::nrm2(&vj) - 1.0).abs() < 1e-10);
                for k in 0..j {
                    let vk = eig.eigenvector(k);
                    assert!(sparse::dot(&vj, &vk).abs() < 1e-10);
                }
            }
        }
    }
}
