//! Target functional and its gradient over edge perturbations.
//!
//! The functional drives the first nonzero eigenvalue of the up-Laplacian to
//! zero while penalizing loss of algebraic connectivity:
//!
//! ```text
//! F(eps, E) = lambda_+^2 / 2 + (alpha/2) * max(0, 1 - mu_2 / mu_bar)^2
//! ```
//!
//! The gradient with respect to the perturbation values is assembled from the
//! eigenvectors of the two Laplacians and the weight-coupling Jacobians. The
//! admissible steepest-descent directions add the non-negativity projection
//! and the multiplier that keeps the flow on the unit sphere.

use alloc::vec;
use alloc::vec::Vec;

use crate::complex::SimplicialComplex;
use crate::laplacian::LaplacianBundle;
use crate::solver::SpectralPoint;
use crate::sparse::{dot, nrm2};
use crate::weights::{WeightJacobians, WeightProfile, ZERO_WEIGHT_TOL};

/// Penalty weight and connectedness threshold of the functional.
#[derive(Debug, Clone, Copy)]
pub struct FunctionalParams {
    /// Penalty weight `alpha > 0`.
    pub alpha: f64,
    /// Connectedness threshold `mu_bar > 0`; the penalty activates when the
    /// algebraic connectivity falls below it.
    pub mu_bar: f64,
}

impl FunctionalParams {
    pub fn new(alpha: f64, mu_bar: f64) -> Self {
        assert!(alpha > 0.0 && mu_bar > 0.0);
        Self { alpha, mu_bar }
    }
}

/// Diagonal edge perturbation; the norm constraint treats the diagonal as a
/// vector, so the Frobenius norm is the Euclidean norm of `values`.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    pub values: Vec<f64>,
}

impl Perturbation {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn zeros(m: usize) -> Self {
        Self { values: vec![0.0; m] }
    }

    pub fn norm(&self) -> f64 {
        nrm2(&self.values)
    }

    /// Uniform shrink direction of unit norm; the default initial guess.
    pub fn uniform_shrink(m: usize) -> Self {
        assert!(m > 0);
        let v = -1.0 / libm::sqrt(m as f64);
        Self { values: vec![v; m] }
    }
}

/// Free gradient together with its admissible projection and the sphere
/// multiplier.
#[derive(Debug, Clone)]
pub struct GradientInfo {
    /// Free gradient `G = grad_E F`.
    pub g: Vec<f64>,
    /// `P_+ G`: gradient zeroed on edges whose perturbed weight is zero.
    pub g_projected: Vec<f64>,
    /// Sphere multiplier `kappa = <G, P_+ E> / ||P_+ E||^2`; `NaN` when the
    /// projected perturbation vanishes.
    pub kappa: f64,
    /// `||P_+ E||^2`.
    pub projected_norm2: f64,
    /// Edges zeroed by the projection.
    pub active_set: Vec<usize>,
    /// Per-edge support mask of `P_+` (true = direction allowed).
    pub support: Vec<bool>,
    /// Either eigenvalue was flagged as numerically multiple; the gradient is
    /// still returned but the caller should treat the step with caution.
    pub degenerate: bool,
}

/// Value of the target functional.
pub fn eval_functional(lambda_plus: f64, mu2: f64, p: &FunctionalParams) -> f64 {
    let hinge = (1.0 - mu2 / p.mu_bar).max(0.0);
    0.5 * lambda_plus * lambda_plus + 0.5 * p.alpha * hinge * hinge
}

/// Assemble the free gradient of `F` with respect to the perturbation values.
///
/// `bundle` must be assembled from the weights produced by `eps * e_pert`, and
/// the spectral points must belong to that bundle.
#[allow(clippy::too_many_arguments)]
pub fn free_gradient(
    c: &SimplicialComplex,
    profile: &WeightProfile,
    bundle: &LaplacianBundle,
    sp_lambda: &SpectralPoint,
    sp_mu: &SpectralPoint,
    jac: &WeightJacobians,
    params: &FunctionalParams,
    eps: f64,
    e_pert: &Perturbation,
) -> GradientInfo {
    let m = c.n_edges();
    let pw = &bundle.weights;
    let lambda = sp_lambda.value;
    let mu2 = sp_mu.value;
    let x = &sp_lambda.vector;
    let y = &sp_mu.vector;
    debug_assert_eq!(x.len(), m);
    debug_assert_eq!(y.len(), c.n_vertices());

    // lambda block: d lambda / d w1_tilde(e)
    //   = -lambda x(e)^2 / w1(e) + sum_t J12[e,t] z(t)^2,
    // with z = B2^T (x / sqrt(w1)).
    let x_hat: Vec<f64> = (0..m)
        .map(|e| if pw.w1[e] > ZERO_WEIGHT_TOL { x[e] / libm::sqrt(pw.w1[e]) } else { 0.0 })
        .collect();
    let mut z2 = vec![0.0; c.n_triangles()];
    for t in 0..c.n_triangles() {
        let [ejk, eik, eij] = c.triangle_edge_positions(t);
        let z = x_hat[ejk] - x_hat[eik] + x_hat[eij];
        z2[t] = z * z;
    }
    let mut g_lambda = jac.j12_apply(m, &z2);
    for e in 0..m {
        if pw.w1[e] > ZERO_WEIGHT_TOL {
            g_lambda[e] -= lambda * x[e] * x[e] / pw.w1[e];
        }
    }

    // mu block: d mu2 / d w1_tilde(e)
    //   = q(e)^2 - mu2 * (y(i)^2/w0(i) + y(j)^2/w0(j)),  e = (i, j),
    // with q = B1^T (y / sqrt(w0)).
    let hinge = (1.0 - mu2 / params.mu_bar).max(0.0);
    let mut g = vec![0.0; m];
    if hinge > 0.0 {
        let y_hat: Vec<f64> =
            (0..c.n_vertices()).map(|v| y[v] / libm::sqrt(pw.w0[v])).collect();
        let y_pen: Vec<f64> =
            (0..c.n_vertices()).map(|v| y[v] * y[v] / pw.w0[v]).collect();
        let pen_edges = WeightJacobians::j10_apply(c, &y_pen);
        for (e, &(i, j)) in c.edges().iter().enumerate() {
            let q = y_hat[j as usize] - y_hat[i as usize];
            let g_mu = q * q - mu2 * pen_edges[e];
            g[e] = eps * (lambda * g_lambda[e] - params.alpha / params.mu_bar * hinge * g_mu);
        }
    } else {
        for e in 0..m {
            g[e] = eps * lambda * g_lambda[e];
        }
    }

    // Non-negativity projection support: W1 + eps E > 0.
    let _ = profile;
    let support: Vec<bool> = (0..m).map(|e| pw.w1[e] > ZERO_WEIGHT_TOL).collect();
    let active_set: Vec<usize> = (0..m).filter(|&e| !support[e]).collect();
    let g_projected: Vec<f64> =
        g.iter().enumerate().map(|(e, &v)| if support[e] { v } else { 0.0 }).collect();

    let mut projected_norm2 = 0.0;
    let mut g_dot_pe = 0.0;
    for e in 0..m {
        if support[e] {
            projected_norm2 += e_pert.values[e] * e_pert.values[e];
            g_dot_pe += g[e] * e_pert.values[e];
        }
    }
    let kappa = if projected_norm2 > 0.0 { g_dot_pe / projected_norm2 } else { f64::NAN };

    GradientInfo {
        g,
        g_projected,
        kappa,
        projected_norm2,
        active_set,
        support,
        degenerate: sp_lambda.multiplicity_flag || sp_mu.multiplicity_flag,
    }
}

/// The projected perturbation vanished, so the sphere multiplier is
/// undefined; the caller should shrink the step instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZeroProjectedNorm;

impl core::fmt::Display for ZeroProjectedNorm {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "projected perturbation has zero norm")
    }
}

impl core::error::Error for ZeroProjectedNorm {}

/// Steepest admissible descent direction on the unit sphere:
/// `-P_+ G + kappa P_+ E`, orthogonal to `E` by construction.
pub fn constrained_direction(
    e_pert: &Perturbation,
    g: &GradientInfo,
) -> Result<Vec<f64>, ZeroProjectedNorm> {
    if !(g.projected_norm2 > 0.0) {
        return Err(ZeroProjectedNorm);
    }
    Ok(e_pert
        .values
        .iter()
        .zip(&g.g_projected)
        .enumerate()
        .map(|(e, (&ev, &gv))| if g.support[e] { -gv + g.kappa * ev } else { 0.0 })
        .collect())
}

/// Norm-growing descent direction used between outer levels: the plain
/// projected anti-gradient in the interior of the unit ball, with the
/// `min(0, kappa) E` correction once the boundary is reached.
pub fn free_direction(e_pert: &Perturbation, g: &GradientInfo) -> Vec<f64> {
    let norm = e_pert.norm();
    let boundary = norm >= 1.0 - 1e-12;
    let mu = if boundary && g.projected_norm2 > 0.0 { g.kappa.min(0.0) } else { 0.0 };
    e_pert
        .values
        .iter()
        .zip(&g.g_projected)
        .map(|(&ev, &gv)| -gv + mu * ev)
        .collect()
}

/// Relative misalignment between the projected gradient and the perturbation:
/// zero exactly at the stationary points where `E` is a multiple of `P_+ G`.
pub fn stationarity_measure(e_pert: &Perturbation, g: &GradientInfo) -> f64 {
    let pg = &g.g_projected;
    let pg_norm = nrm2(pg);
    if pg_norm == 0.0 {
        return 0.0;
    }
    let proj = dot(pg, &e_pert.values);
    let mut residual = 0.0;
    for e in 0..pg.len() {
        let r = pg[e] - proj * e_pert.values[e];
        residual += r * r;
    }
    libm::sqrt(residual) / pg_norm
}
