//! Spectral solvers for the smallest nonzero eigenvalues.
//!
//! Both eigenvalue problems of the flow concern symmetric positive
//! semidefinite matrices with a known kernel dimension: the graph Laplacian
//! (kernel = component indicators) and the up-Laplacian (kernel dimension
//! `n + beta1 - 1` on a connected graph). Below the dense threshold a full
//! symmetric eigendecomposition picks the requested eigenvalue by index; at
//! scale an inverse iteration applies the pseudoinverse through LSMR
//! least-squares solves, optionally preconditioned by a constant incomplete
//! Cholesky factor of the initial matrix.

pub mod ichol;
pub mod lsmr;

use alloc::vec;
use alloc::vec::Vec;

use crate::dense::sym_eigen_csr;
use crate::rng::SplitMix64;
use crate::sparse::{self, CsrMatrix};

pub use ichol::{ichol_factor, BreakdownNegativePivot, IcholFactor};
pub use lsmr::{lsmr, LeftPreconditioned, LinearOperator, LsmrResult};

/// Eigenvalues below `1e-10 * scale` count as kernel.
const KERNEL_ZERO_FACTOR: f64 = 1e-10;
/// Eigen-gap below `1e-9 * scale` flags numerically multiple eigenvalues.
const SIMPLICITY_FACTOR: f64 = 1e-9;

/// Which eigensolver backend to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverMode {
    Dense,
    Iterative,
    /// Dense below `dense_threshold`, iterative above.
    Auto,
}

/// Preconditioner choice for the iterative path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preconditioner {
    None,
    Ichol,
}

/// Solver configuration.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub mode: SolverMode,
    /// Relative tolerance on the normal-equation residual of each inner
    /// least-squares solve.
    pub lsqr_tol: f64,
    /// Iteration cap per least-squares solve.
    pub max_iters: usize,
    pub precond: Preconditioner,
    /// Matrix dimension below which `Auto` prefers the dense path.
    pub dense_threshold: usize,
    /// Relative residual `||A v - lambda v|| <= eig_tol * scale` declaring an
    /// eigenpair converged.
    pub eig_tol: f64,
    /// Outer inverse-iteration cap.
    pub max_outer: usize,
    /// Seed for the deterministic start vectors of the iterative path.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            mode: SolverMode::Auto,
            lsqr_tol: 1e-10,
            max_iters: 4000,
            precond: Preconditioner::None,
            dense_threshold: 400,
            eig_tol: 1e-9,
            max_outer: 500,
            seed: 0x5eed,
        }
    }
}

/// A computed eigenpair.
#[derive(Debug, Clone)]
pub struct SpectralPoint {
    pub value: f64,
    /// Unit-norm eigenvector.
    pub vector: Vec<f64>,
    /// `||A v - lambda v||` at exit.
    pub residual: f64,
    /// The gap to a neighboring computed eigenvalue is below the simplicity
    /// tolerance (dense path), or the Rayleigh quotient kept drifting after
    /// the residual converged (iterative path).
    pub multiplicity_flag: bool,
}

#[derive(Debug, Clone)]
pub enum SolverError {
    /// Iteration cap reached with the residual above tolerance.
    NoConvergence { residual: f64, iterations: usize },
    /// The numerical kernel is larger than the declared analytic kernel;
    /// during the flow this signals that the homology already changed.
    KernelDimMismatch { declared: usize, computed: usize, point: Option<SpectralPoint> },
    /// Incomplete Cholesky broke down on every shift retry.
    Ichol(BreakdownNegativePivot),
}

impl core::fmt::Display for SolverError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SolverError::NoConvergence { residual, iterations } => {
                write!(f, "no convergence after {iterations} iterations (residual {residual:e})")
            }
            SolverError::KernelDimMismatch { declared, computed, .. } => {
                write!(f, "kernel dimension mismatch: declared {declared}, computed {computed}")
            }
            SolverError::Ichol(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for SolverError {}

impl From<BreakdownNegativePivot> for SolverError {
    fn from(e: BreakdownNegativePivot) -> Self {
        SolverError::Ichol(e)
    }
}

/// Cumulative work counters, reported into trajectory logs and used by the
/// preconditioning benchmarks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolverStats {
    pub eig_solves: usize,
    pub dense_solves: usize,
    pub lsqr_solves: usize,
    pub lsqr_iterations: usize,
}

impl SolverStats {
    pub fn merge(&mut self, other: &SolverStats) {
        self.eig_solves += other.eig_solves;
        self.dense_solves += other.dense_solves;
        self.lsqr_solves += other.lsqr_solves;
        self.lsqr_iterations += other.lsqr_iterations;
    }
}

/// Solution of a least-squares subproblem.
#[derive(Debug, Clone)]
pub struct LsqrSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub normal_residual: f64,
}

/// Minimize `||A x - b||` by LSMR with an optional incomplete-Cholesky left
/// preconditioner. With a preconditioner the minimized norm is
/// `||C^-1 (A x - b)||`, which has the same solutions on consistent systems.
pub fn lsqr_solve(
    a: &CsrMatrix,
    b: &[f64],
    precond: Option<&IcholFactor>,
    tol: f64,
    max_iters: usize,
) -> Result<LsqrSolution, SolverError> {
    let result = match precond {
        Some(factor) => {
            let op = LeftPreconditioned { a, factor };
            let rhs = factor.forward_solve(b);
            lsmr(&op, &rhs, tol, max_iters)
        }
        None => lsmr(a, b, tol, max_iters),
    };
    if !result.converged {
        return Err(SolverError::NoConvergence {
            residual: result.normal_residual,
            iterations: result.iterations,
        });
    }
    Ok(LsqrSolution {
        x: result.x,
        iterations: result.iterations,
        normal_residual: result.normal_residual,
    })
}

/// Reusable eigensolver carrying a constant preconditioner, warm starts and
/// work counters across the flow.
#[derive(Debug, Clone)]
pub struct EigenSolver {
    pub cfg: SolverConfig,
    precond: Option<IcholFactor>,
    warm: Option<Vec<f64>>,
    /// Orthonormal basis of known kernel vectors to deflate explicitly.
    kernel_basis: Vec<Vec<f64>>,
    pub stats: SolverStats,
}

impl EigenSolver {
    pub fn new(cfg: SolverConfig) -> Self {
        Self { cfg, precond: None, warm: None, kernel_basis: Vec::new(), stats: SolverStats::default() }
    }

    /// Factor the given (reference) matrix as the constant preconditioner for
    /// all subsequent iterative solves.
    pub fn set_preconditioner_from(&mut self, a: &CsrMatrix) -> Result<(), SolverError> {
        self.precond = Some(ichol_factor(a)?);
        Ok(())
    }

    pub fn clear_preconditioner(&mut self) {
        self.precond = None;
    }

    /// Replace the explicit kernel basis (vectors are orthonormalized here).
    pub fn set_kernel_basis(&mut self, basis: Vec<Vec<f64>>) {
        let mut ortho: Vec<Vec<f64>> = Vec::with_capacity(basis.len());
        for mut v in basis {
            for b in &ortho {
                let c = sparse::dot(&v, b);
                sparse::axpy(-c, b, &mut v);
            }
            if sparse::normalize(&mut v) > 1e-14 {
                ortho.push(v);
            }
        }
        self.kernel_basis = ortho;
    }

    pub fn set_warm_start(&mut self, v: Vec<f64>) {
        self.warm = Some(v);
    }

    pub fn clear_warm_start(&mut self) {
        self.warm = None;
    }

    /// Smallest eigenvalue beyond the declared kernel, with its eigenvector.
    ///
    /// Panics if `kernel_dim >= dim(A)`: a matrix whose declared kernel fills
    /// the whole space has no such eigenvalue.
    pub fn solve(&mut self, a: &CsrMatrix, kernel_dim: usize) -> Result<SpectralPoint, SolverError> {
        assert_eq!(a.nrows(), a.ncols());
        assert!(kernel_dim < a.nrows(), "declared kernel fills the whole space");
        self.stats.eig_solves += 1;
        let dense = match self.cfg.mode {
            SolverMode::Dense => true,
            SolverMode::Iterative => false,
            SolverMode::Auto => a.nrows() <= self.cfg.dense_threshold,
        };
        let point = if dense { self.solve_dense(a, kernel_dim) } else { self.solve_iterative(a, kernel_dim) }?;
        self.warm = Some(point.vector.clone());
        Ok(point)
    }

    fn solve_dense(&mut self, a: &CsrMatrix, kernel_dim: usize) -> Result<SpectralPoint, SolverError> {
        self.stats.dense_solves += 1;
        let scale = a.max_abs().max(1.0);
        let zero_tol = KERNEL_ZERO_FACTOR * scale;
        let eig = sym_eigen_csr(a).map_err(|_| SolverError::NoConvergence {
            residual: f64::INFINITY,
            iterations: 0,
        })?;
        let computed_kernel = eig.values.iter().take_while(|&&v| v < zero_tol).count();
        if computed_kernel > kernel_dim {
            let point = spectral_point_from(a, eig.values[kernel_dim], eig.eigenvector(kernel_dim), false);
            return Err(SolverError::KernelDimMismatch {
                declared: kernel_dim,
                computed: computed_kernel,
                point: Some(point),
            });
        }
        let value = eig.values[kernel_dim];
        let vector = eig.eigenvector(kernel_dim);
        let gap_above = if kernel_dim + 1 < eig.values.len() {
            (eig.values[kernel_dim + 1] - value).abs()
        } else {
            f64::INFINITY
        };
        let gap_below =
            if kernel_dim > 0 { (value - eig.values[kernel_dim - 1]).abs() } else { f64::INFINITY };
        let multiplicity_flag = gap_above.min(gap_below) < SIMPLICITY_FACTOR * scale;
        Ok(spectral_point_from(a, value, vector, multiplicity_flag))
    }

    /// Lanczos on the pseudoinverse: each operator application is a
    /// least-squares solve `A^+ q` by LSMR (started from zero, so iterates
    /// stay in `range(A)` and the structural kernel is suppressed
    /// automatically). The largest Ritz value of the tridiagonal projection
    /// approximates `1 / lambda_min+(A)`; full reorthogonalization keeps the
    /// basis clean and restarts bound the subspace size.
    fn solve_iterative(&mut self, a: &CsrMatrix, kernel_dim: usize) -> Result<SpectralPoint, SolverError> {
        let n = a.nrows();
        let scale = a.max_abs().max(1.0);
        let zero_tol = KERNEL_ZERO_FACTOR * scale;
        let max_subspace = 40usize.min(n.max(2));
        let mut rng = SplitMix64::new(self.cfg.seed ^ ((n as u64) << 1));

        let mut start = match self.warm.as_ref() {
            Some(w) if w.len() == n => w.clone(),
            // Push a deterministic random vector into range(A) before use.
            _ => {
                let r: Vec<f64> = (0..n).map(|_| rng.next_range(-1.0, 1.0)).collect();
                a.apply(&r)
            }
        };
        self.deflate(&mut start);
        if sparse::normalize(&mut start) <= 1e-300 {
            let r: Vec<f64> = (0..n).map(|_| rng.next_range(-1.0, 1.0)).collect();
            start = a.apply(&r);
            self.deflate(&mut start);
            if sparse::normalize(&mut start) <= 1e-300 {
                // Range is (numerically) empty beyond the kernel basis.
                return Err(SolverError::KernelDimMismatch {
                    declared: kernel_dim,
                    computed: n,
                    point: None,
                });
            }
        }

        let mut best: Option<SpectralPoint> = None;
        let mut solves = 0usize;

        'restart: while solves < self.cfg.max_outer {
            let mut basis: Vec<Vec<f64>> = vec![start.clone()];
            let mut alphas: Vec<f64> = Vec::new();
            let mut betas: Vec<f64> = Vec::new();

            while solves < self.cfg.max_outer && basis.len() <= max_subspace {
                let q = basis.last().unwrap().clone();
                let solve = match self.precond.as_ref() {
                    Some(factor) if factor.dim() == n => {
                        let op = LeftPreconditioned { a, factor };
                        let rhs = factor.forward_solve(&q);
                        lsmr(&op, &rhs, self.cfg.lsqr_tol, self.cfg.max_iters)
                    }
                    _ => lsmr(a, &q, self.cfg.lsqr_tol, self.cfg.max_iters),
                };
                solves += 1;
                self.stats.lsqr_solves += 1;
                self.stats.lsqr_iterations += solve.iterations;

                let mut w = solve.x;
                self.deflate(&mut w);
                alphas.push(sparse::dot(&q, &w));
                // Full reorthogonalization, twice for safety.
                for _ in 0..2 {
                    for b in &basis {
                        let c = sparse::dot(&w, b);
                        sparse::axpy(-c, b, &mut w);
                    }
                }
                let beta = sparse::nrm2(&w);

                // Ritz extraction from the tridiagonal projection.
                let k = alphas.len();
                let mut t = vec![0.0f64; k * k];
                for i in 0..k {
                    t[i * k + i] = alphas[i];
                    if i + 1 < k {
                        t[i * k + i + 1] = betas[i];
                        t[(i + 1) * k + i] = betas[i];
                    }
                }
                let eig = crate::dense::sym_eigen(&t, k).map_err(|_| SolverError::NoConvergence {
                    residual: f64::INFINITY,
                    iterations: solves,
                })?;
                let theta = eig.values[k - 1];
                if theta > 0.0 {
                    let s = eig.eigenvector(k - 1);
                    let mut y = vec![0.0f64; n];
                    for (j, b) in basis.iter().enumerate() {
                        sparse::axpy(s[j], b, &mut y);
                    }
                    self.deflate(&mut y);
                    sparse::normalize(&mut y);
                    let ay = a.apply(&y);
                    let lambda = sparse::dot(&y, &ay);
                    let mut res = 0.0;
                    for i in 0..n {
                        let r = ay[i] - lambda * y[i];
                        res += r * r;
                    }
                    let res = libm::sqrt(res);

                    if lambda < zero_tol {
                        return Err(SolverError::KernelDimMismatch {
                            declared: kernel_dim,
                            computed: kernel_dim + 1,
                            point: Some(SpectralPoint {
                                value: lambda.max(0.0),
                                vector: y,
                                residual: res,
                                multiplicity_flag: false,
                            }),
                        });
                    }

                    let improved = best.as_ref().map(|b| res < b.residual).unwrap_or(true);
                    if improved {
                        // Gap between the two largest Ritz values of A^+,
                        // mapped back to the eigenvalue scale.
                        let multiplicity_flag = if k >= 2 && eig.values[k - 2] > 0.0 {
                            (1.0 / theta - 1.0 / eig.values[k - 2]).abs() < SIMPLICITY_FACTOR * scale
                        } else {
                            false
                        };
                        best = Some(SpectralPoint { value: lambda, vector: y.clone(), residual: res, multiplicity_flag });
                    }
                    if res <= self.cfg.eig_tol * scale {
                        return Ok(best.unwrap());
                    }
                    if beta <= 1e-14 * theta.abs().max(1.0) {
                        // Invariant subspace exhausted; restart from the
                        // current Ritz vector.
                        start = y;
                        continue 'restart;
                    }
                } else if beta <= 1e-300 {
                    break;
                }

                betas.push(beta);
                let mut q_next = w;
                sparse::scale(1.0 / beta, &mut q_next);
                basis.push(q_next);
            }

            // Subspace cap reached: restart from the best Ritz vector.
            match best.as_ref() {
                Some(b) => start = b.vector.clone(),
                None => {
                    let r: Vec<f64> = (0..n).map(|_| rng.next_range(-1.0, 1.0)).collect();
                    start = a.apply(&r);
                    self.deflate(&mut start);
                    if sparse::normalize(&mut start) <= 1e-300 {
                        break;
                    }
                }
            }
        }

        let residual = best.map(|b| b.residual).unwrap_or(f64::INFINITY);
        Err(SolverError::NoConvergence { residual, iterations: solves })
    }

    fn deflate(&self, v: &mut [f64]) {
        for b in &self.kernel_basis {
            let c = sparse::dot(v, b);
            sparse::axpy(-c, b, v);
        }
    }
}

fn spectral_point_from(a: &CsrMatrix, value: f64, vector: Vec<f64>, flag: bool) -> SpectralPoint {
    let av = a.apply(&vector);
    let mut res = 0.0;
    for i in 0..vector.len() {
        let r = av[i] - value * vector[i];
        res += r * r;
    }
    SpectralPoint { value, vector, residual: libm::sqrt(res), multiplicity_flag: flag }
}

/// One-shot entry point: smallest eigenvalue beyond the declared kernel.
///
/// With `Preconditioner::Ichol` the factor is built from `a` itself; flows
/// that want a constant preconditioner along a matrix path should hold an
/// [`EigenSolver`] instead.
pub fn smallest_nonzero_eig(
    a: &CsrMatrix,
    kernel_dim: usize,
    cfg: &SolverConfig,
) -> Result<SpectralPoint, SolverError> {
    let mut solver = EigenSolver::new(cfg.clone());
    if cfg.precond == Preconditioner::Ichol {
        solver.set_preconditioner_from(a)?;
    }
    solver.solve(a, kernel_dim)
}
