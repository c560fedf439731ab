//! Matrix rank computation for Betti numbers.
//!
//! Boundary matrices are integer matrices, so at desk scale the rank is
//! computed exactly by fraction-free (Bareiss) elimination over `i128` with
//! overflow checking. Above a size threshold, or on the rare overflow, the
//! rank falls back to counting singular values above `1e-10 * ||A||`.

use alloc::vec;
use alloc::vec::Vec;

use crate::dense::sym_eigen;

/// Total simplex count above which Betti ranks switch to the floating-point
/// singular-value path.
pub const EXACT_RANK_SIMPLEX_LIMIT: usize = 2000;

const SV_TOL_FACTOR: f64 = 1e-10;

/// Exact rank by fraction-free Gaussian elimination.
///
/// Returns `None` if an intermediate product would overflow `i128`; entries of
/// a Bareiss elimination are minors of the input, which stay small for the
/// incidence-type matrices seen here, so overflow is essentially theoretical.
pub fn bareiss_rank(entries: &[(usize, usize, i64)], nrows: usize, ncols: usize) -> Option<usize> {
    if nrows == 0 || ncols == 0 {
        return Some(0);
    }
    let mut m = vec![0i128; nrows * ncols];
    for &(r, c, v) in entries {
        m[r * ncols + c] = v as i128;
    }

    let mut prev: i128 = 1;
    let mut rank = 0usize;
    let maxrank = nrows.min(ncols);

    while rank < maxrank {
        // Smallest-magnitude nonzero pivot keeps intermediate growth down.
        let mut pivot: Option<(usize, usize)> = None;
        for i in rank..nrows {
            for j in rank..ncols {
                let v = m[i * ncols + j];
                if v != 0 {
                    match pivot {
                        Some((pi, pj)) if m[pi * ncols + pj].unsigned_abs() <= v.unsigned_abs() => {}
                        _ => pivot = Some((i, j)),
                    }
                }
            }
        }
        let Some((pi, pj)) = pivot else { break };
        if pi != rank {
            for j in 0..ncols {
                m.swap(rank * ncols + j, pi * ncols + j);
            }
        }
        if pj != rank {
            for i in 0..nrows {
                m.swap(i * ncols + rank, i * ncols + pj);
            }
        }
        let piv = m[rank * ncols + rank];
        for i in (rank + 1)..nrows {
            let mik = m[i * ncols + rank];
            if mik == 0 {
                continue;
            }
            for j in (rank + 1)..ncols {
                let a = piv.checked_mul(m[i * ncols + j])?;
                let b = mik.checked_mul(m[rank * ncols + j])?;
                let num = a.checked_sub(b)?;
                // Exact division per Bareiss.
                m[i * ncols + j] = num / prev;
            }
            m[i * ncols + rank] = 0;
        }
        prev = piv;
        rank += 1;
    }
    Some(rank)
}

/// Numerical rank: number of singular values above `1e-10 * ||A||_F`.
///
/// Singular values come from the symmetric Jordan-Wielandt embedding
/// `[[0, A], [A^T, 0]]`, whose eigenvalues are `{+/- sigma_i}` plus zeros.
/// Unlike the Gram matrix, its rounding noise stays at `O(eps * ||A||)`, so
/// the `1e-10 * ||A||` threshold is meaningful.
pub fn float_rank(entries: &[(usize, usize, i64)], nrows: usize, ncols: usize) -> usize {
    if nrows == 0 || ncols == 0 || entries.is_empty() {
        return 0;
    }
    let dim = nrows + ncols;
    let mut jw = vec![0.0f64; dim * dim];
    let mut fro2 = 0.0;
    for &(r, c, v) in entries {
        let v = v as f64;
        jw[r * dim + (nrows + c)] = v;
        jw[(nrows + c) * dim + r] = v;
        fro2 += v * v;
    }
    let eig = sym_eigen(&jw, dim).expect("Jordan-Wielandt eigendecomposition");
    let tol = SV_TOL_FACTOR * libm::sqrt(fro2);
    eig.values.iter().filter(|&&sigma| sigma > tol).count()
}

/// Rank with automatic method selection based on the total simplex count of
/// the surrounding complex.
pub fn rank_auto(entries: &[(usize, usize, i64)], nrows: usize, ncols: usize, total_simplices: usize) -> usize {
    if total_simplices <= EXACT_RANK_SIMPLEX_LIMIT {
        if let Some(r) = bareiss_rank(entries, nrows, ncols) {
            return r;
        }
    }
    float_rank(entries, nrows, ncols)
}
