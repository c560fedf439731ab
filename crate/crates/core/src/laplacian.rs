//! Normalized weighted boundary operators and Laplacians.
//!
//! For diagonal weight matrices `W_k = Diag(w_k^(1/2))` the normalized
//! boundary operators are `B1_bar = W0^-1 B1 W1` and `B2_bar = W1^-1 B2 W2`,
//! giving
//!
//! ```text
//! L0      = B1_bar B1_bar^T        (n x n)
//! L1_down = B1_bar^T B1_bar        (m x m)
//! L1_up   = B2_bar B2_bar^T        (m x m)
//! ```
//!
//! Edges with zero perturbed weight stay in the matrix dimensions; their
//! `B2_bar` rows vanish because the triangle weights decay at matching order
//! (the 0/0 entries are resolved to 0), so the flow can keep operating on a
//! fixed-size up-Laplacian.

use alloc::vec::Vec;

use crate::complex::SimplicialComplex;
use crate::dense::sym_eigen_csr;
use crate::sparse::CsrMatrix;
use crate::weights::{PerturbedWeights, ZERO_WEIGHT_TOL};

/// Eigenvalues below this count as kernel when sizing homology numerically.
pub const KERNEL_EIG_TOL: f64 = 1e-10;

/// Assembled normalized operators for one perturbed weight state.
#[derive(Debug, Clone)]
pub struct LaplacianBundle {
    pub b1_bar: CsrMatrix,
    pub b2_bar: CsrMatrix,
    pub l0: CsrMatrix,
    pub l1_up: CsrMatrix,
    pub l1_down: CsrMatrix,
    /// The weight snapshot the bundle was assembled from.
    pub weights: PerturbedWeights,
}

/// Assemble all normalized operators for the given perturbed weights.
pub fn assemble(c: &SimplicialComplex, pw: &PerturbedWeights) -> LaplacianBundle {
    assert!(
        pw.w0.iter().all(|&w| w > 0.0),
        "vertex weights must stay positive (rho > 0)"
    );
    let n = c.n_vertices();
    let m = c.n_edges();

    let inv_s0: Vec<f64> = pw.w0.iter().map(|&w| 1.0 / libm::sqrt(w)).collect();
    let s1: Vec<f64> = pw.w1.iter().map(|&w| libm::sqrt(w.max(0.0))).collect();

    let mut b1_triplets = Vec::with_capacity(2 * m);
    for (e, &(i, j)) in c.edges().iter().enumerate() {
        if s1[e] == 0.0 {
            continue;
        }
        b1_triplets.push((i as usize, e, -inv_s0[i as usize] * s1[e]));
        b1_triplets.push((j as usize, e, inv_s0[j as usize] * s1[e]));
    }
    let b1_bar = CsrMatrix::from_triplets(n, m, &b1_triplets);

    let mut b2_triplets = Vec::with_capacity(3 * c.n_triangles());
    for t in 0..c.n_triangles() {
        if pw.w2[t] <= 0.0 {
            continue; // dead triangle: whole column vanishes
        }
        let sqrt_w2 = libm::sqrt(pw.w2[t]);
        let faces = c.triangle_edge_positions(t);
        for (slot, &e) in faces.iter().enumerate() {
            debug_assert!(
                pw.w1[e] > ZERO_WEIGHT_TOL,
                "live triangle over a dead edge; the weight coupling must prevent this"
            );
            let sign = if slot == 1 { -1.0 } else { 1.0 };
            b2_triplets.push((e, t, sign * sqrt_w2 / s1[e]));
        }
    }
    let b2_bar = CsrMatrix::from_triplets(m, c.n_triangles(), &b2_triplets);

    let b1_bar_t = b1_bar.transpose();
    let b2_bar_t = b2_bar.transpose();
    let l0 = b1_bar.matmul(&b1_bar_t);
    let l1_down = b1_bar_t.matmul(&b1_bar);
    let l1_up = b2_bar.matmul(&b2_bar_t);

    LaplacianBundle { b1_bar, b2_bar, l0, l1_up, l1_down, weights: pw.clone() }
}

impl LaplacianBundle {
    /// Full Hodge Laplacian `L1 = L1_down + L1_up`.
    pub fn l1(&self) -> CsrMatrix {
        self.l1_down.add(&self.l1_up)
    }

    /// Kernel dimension of the up-Laplacian: `m - rank B2`, which by the
    /// Hodge split `m = rank B1 + rank B2 + beta1` equals
    /// `n - beta0 + beta1` (so `n + beta1 - 1` on a connected graph).
    pub fn up_kernel_dim(n: usize, beta0: usize, beta1: usize) -> usize {
        debug_assert!(beta0 >= 1);
        n - beta0 + beta1
    }
}

/// First homology dimension from the numerical kernel of the weighted Hodge
/// Laplacian: the count of eigenvalues below `1e-10`.
///
/// Dense eigendecomposition inside; intended for desk-scale complexes and
/// cross-checks against the exact rank-based Betti numbers.
pub fn betti_weighted(b: &LaplacianBundle) -> usize {
    let l1 = b.l1();
    let eig = sym_eigen_csr(&l1).expect("L1 eigendecomposition");
    eig.values.iter().filter(|&&v| v < KERNEL_EIG_TOL).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::Perturbation;
    use crate::weights::{perturb, WeightProfile};

    fn fig1() -> SimplicialComplex {
        let vertices: Vec<i64> = (1..=7).collect();
        let edges = [(1, 2), (1, 3), (2, 3), (2, 4), (3, 5), (4, 5), (4, 6), (4, 7), (5, 6), (6, 7)];
        let triangles = [(1, 2, 3), (4, 5, 6), (4, 6, 7)];
        SimplicialComplex::build(&vertices, &edges, Some(&triangles)).unwrap()
    }

    fn unit_bundle(c: &SimplicialComplex) -> LaplacianBundle {
        let p = WeightProfile::unit(c);
        let pw = perturb(c, &p, 0.0, &Perturbation::zeros(c.n_edges())).unwrap();
        assemble(c, &pw)
    }

    #[test]
    fn l0_entries_match_closed_form() {
        // Unit weights, rho = 1: diagonal deg/(deg+1), off-diagonal
        // -w1(ij)/sqrt(w0(i) w0(j)).
        let c = fig1();
        let b = unit_bundle(&c);
        for v in 0..c.n_vertices() {
            let deg = c.degree(v) as f64;
            assert!((b.l0.get(v, v) - deg / (deg + 1.0)).abs() < 1e-14);
        }
        for (e, &(i, j)) in c.edges().iter().enumerate() {
            let _ = e;
            let (i, j) = (i as usize, j as usize);
            let w0i = c.degree(i) as f64 + 1.0;
            let w0j = c.degree(j) as f64 + 1.0;
            let expect = -1.0 / libm::sqrt(w0i * w0j);
            assert!((b.l0.get(i, j) - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn single_triangle_up_spectrum() {
        let c = SimplicialComplex::build(&[1, 2, 3], &[(1, 2), (1, 3), (2, 3)], None).unwrap();
        let b = unit_bundle(&c);
        let eig = sym_eigen_csr(&b.l1_up).unwrap();
        let positive = eig.values.iter().filter(|&&v| v > 1e-12).count();
        assert_eq!(positive, 1);
    }

    #[test]
    fn b1bar_times_b2bar_vanishes() {
        let c = fig1();
        let b = unit_bundle(&c);
        let prod = b.b1_bar.matmul(&b.b2_bar);
        assert!(prod.max_abs() < 1e-12);
    }

    #[test]
    fn dead_edge_gives_zero_up_row() {
        let c = fig1();
        let p = WeightProfile::unit(&c);
        let e46 = c.edge_position_by_label(4, 6).unwrap();
        let mut vals = vec![0.0; c.n_edges()];
        vals[e46] = -1.0;
        let pw = perturb(&c, &p, 1.0, &Perturbation::new(vals)).unwrap();
        let b = assemble(&c, &pw);
        // Killing (4,6) kills triangles 456 and 467; only 123 survives, so
        // the up-Laplacian acts on edges {12, 13, 23} alone.
        let live: Vec<usize> = [(1, 2), (1, 3), (2, 3)]
            .iter()
            .map(|&(a, b)| c.edge_position_by_label(a, b).unwrap())
            .collect();
        for e in 0..c.n_edges() {
            let (cols, _) = b.l1_up.row(e);
            if live.contains(&e) {
                assert!(b.l1_up.get(e, e) > 0.0);
            } else {
                assert!(cols.is_empty(), "row {e} of L1_up should be empty");
            }
        }
    }

    #[test]
    fn betti_weighted_matches_exact() {
        let c = fig1();
        let b = unit_bundle(&c);
        assert_eq!(betti_weighted(&b), c.betti_numbers().1);
    }

    #[test]
    fn uniform_rescale_keeps_kernel() {
        let c = fig1();
        let mut p = WeightProfile::unit(&c);
        for w in p.w1.iter_mut() {
            *w *= 10.0;
        }
        let pw = perturb(&c, &p, 0.0, &Perturbation::zeros(c.n_edges())).unwrap();
        let b = assemble(&c, &pw);
        assert_eq!(betti_weighted(&b), 1);
    }

    #[test]
    fn example_33_without_connectors_is_hole_free() {
        // Example complex minus edges (2,4), (3,5): triangles kept, no hole.
        let vertices: Vec<i64> = (1..=7).collect();
        let edges = [(1, 2), (1, 3), (2, 3), (4, 5), (4, 6), (5, 6), (5, 7), (6, 7)];
        let triangles = [(1, 2, 3), (4, 5, 6), (5, 6, 7)];
        let c = SimplicialComplex::build(&vertices, &edges, Some(&triangles)).unwrap();
        assert_eq!(c.betti_numbers().1, 0);
        let b = unit_bundle(&c);
        assert_eq!(betti_weighted(&b), 0);
    }
}
