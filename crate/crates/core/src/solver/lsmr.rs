//! LSMR iteration for sparse least-squares problems.
//!
//! Golub-Kahan bidiagonalization with a double QR update (Fong & Saunders).
//! Starting from `x = 0` the iterates stay in the row space of the operator,
//! so applying it to a singular consistent system yields the minimum-norm
//! solution: exactly the pseudoinverse action the inverse iteration needs,
//! with the matrix kernel suppressed automatically.
//!
//! Preconditioning is applied from the left, `min || C^-1 (A x - b) ||`,
//! which preserves the solution set of consistent systems and keeps iterates
//! in `range(A^T)`; `C` is an incomplete Cholesky factor of a reference
//! matrix.

use alloc::vec;
use alloc::vec::Vec;

use crate::solver::ichol::IcholFactor;
use crate::sparse::{self, CsrMatrix};

/// Abstract operator for matrix-free products.
pub trait LinearOperator {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    fn apply(&self, x: &[f64]) -> Vec<f64>;
    fn apply_transpose(&self, x: &[f64]) -> Vec<f64>;
}

impl LinearOperator for CsrMatrix {
    fn nrows(&self) -> usize {
        CsrMatrix::nrows(self)
    }

    fn ncols(&self) -> usize {
        CsrMatrix::ncols(self)
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        CsrMatrix::apply(self, x)
    }

    fn apply_transpose(&self, x: &[f64]) -> Vec<f64> {
        CsrMatrix::apply_transpose(self, x)
    }
}

/// `C^-1 A` for a symmetric `A` and a lower-triangular factor `C`.
pub struct LeftPreconditioned<'a> {
    pub a: &'a CsrMatrix,
    pub factor: &'a IcholFactor,
}

impl core::fmt::Debug for LeftPreconditioned<'_> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("LeftPreconditioned").finish()
    }
}

impl LinearOperator for LeftPreconditioned<'_> {
    fn nrows(&self) -> usize {
        self.a.nrows()
    }

    fn ncols(&self) -> usize {
        self.a.ncols()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.factor.forward_solve(&self.a.apply(x))
    }

    fn apply_transpose(&self, x: &[f64]) -> Vec<f64> {
        self.a.apply_transpose(&self.factor.transpose_solve(x))
    }
}

/// Outcome of an LSMR run.
#[derive(Debug, Clone)]
pub struct LsmrResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// `||A^T r||` at exit, estimated from the recurrences.
    pub normal_residual: f64,
    pub converged: bool,
}

/// Minimize `||A x - b||` from `x0 = 0`, stopping once the normal-equation
/// residual satisfies `||A^T r|| <= tol * ||A^T b||`.
pub fn lsmr(op: &dyn LinearOperator, b: &[f64], tol: f64, max_iters: usize) -> LsmrResult {
    let n = op.ncols();
    let mut x = vec![0.0; n];

    let mut u = b.to_vec();
    let mut beta = sparse::normalize(&mut u);
    if beta == 0.0 {
        return LsmrResult { x, iterations: 0, normal_residual: 0.0, converged: true };
    }
    let mut v = op.apply_transpose(&u);
    let mut alpha = sparse::normalize(&mut v);
    if alpha == 0.0 {
        // b is orthogonal to the range: x = 0 is the least-squares solution.
        return LsmrResult { x, iterations: 0, normal_residual: 0.0, converged: true };
    }

    let normal_target = tol * alpha * beta;

    let mut zetabar = alpha * beta;
    let mut alphabar = alpha;
    let mut rho = 1.0f64;
    let mut rhobar = 1.0f64;
    let mut cbar = 1.0f64;
    let mut sbar = 0.0f64;

    let mut h = v.clone();
    let mut hbar = vec![0.0; n];

    let mut iterations = 0;
    let mut normal_residual = zetabar;
    let mut converged = false;

    while iterations < max_iters {
        iterations += 1;

        // Continue the bidiagonalization.
        let mut au = op.apply(&v);
        for (ai, ui) in au.iter_mut().zip(&u) {
            *ai -= alpha * ui;
        }
        u = au;
        beta = sparse::normalize(&mut u);

        let mut atv = op.apply_transpose(&u);
        for (ti, vi) in atv.iter_mut().zip(&v) {
            *ti -= beta * vi;
        }
        v = atv;
        alpha = sparse::normalize(&mut v);

        // First QR: eliminate beta.
        let rho_new = libm::hypot(alphabar, beta);
        let c = alphabar / rho_new;
        let s = beta / rho_new;
        let theta_new = s * alpha;
        alphabar = c * alpha;

        // Second QR: eliminate thetabar.
        let thetabar = sbar * rho_new;
        let rhobar_new = libm::hypot(cbar * rho_new, theta_new);
        let cbar_new = cbar * rho_new / rhobar_new;
        let sbar_new = theta_new / rhobar_new;
        let zeta = cbar_new * zetabar;
        zetabar = -sbar_new * zetabar;

        // Updates.
        let hbar_scale = thetabar * rho_new / (rho * rhobar);
        for i in 0..n {
            hbar[i] = h[i] - hbar_scale * hbar[i];
        }
        let step = zeta / (rho_new * rhobar_new);
        sparse::axpy(step, &hbar, &mut x);
        let h_scale = theta_new / rho_new;
        for i in 0..n {
            h[i] = v[i] - h_scale * h[i];
        }

        rho = rho_new;
        rhobar = rhobar_new;
        cbar = cbar_new;
        sbar = sbar_new;

        normal_residual = zetabar.abs();
        if normal_residual <= normal_target || beta == 0.0 || alpha == 0.0 {
            converged = true;
            break;
        }
    }

    LsmrResult { x, iterations, normal_residual, converged }
}
