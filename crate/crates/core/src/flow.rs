//! The two-level gradient flow.
//!
//! Outer level: grow the perturbation budget `eps` in fixed increments (with a
//! final bisection refinement) until the functional can be driven to zero.
//! Inner level: at fixed `eps`, integrate the constrained gradient system on
//! the unit sphere of admissible perturbations with a two-step norm-corrected
//! Euler scheme and accept/reject step control. Between outer levels the
//! perturbation is rescaled into the interior of the ball and a free gradient
//! flow grows it back to the sphere.
//!
//! An initial alpha-phase calibrates the connectivity penalty weight before
//! the main loop. Convergence is only declared after an exact rank check
//! confirms that removing the zero-weight edges raises the first Betti
//! number.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::complex::SimplicialComplex;
use crate::functional::{
    constrained_direction, eval_functional, free_direction, free_gradient, stationarity_measure,
    FunctionalParams, GradientInfo, Perturbation,
};
use crate::laplacian::{assemble, LaplacianBundle};
use crate::solver::{EigenSolver, Preconditioner, SolverConfig, SolverError, SolverStats, SpectralPoint};
use crate::sparse::{self};
use crate::weights::{perturb, weight_jacobians, WeightError, WeightProfile, ZERO_WEIGHT_TOL};

/// Edges with perturbed weight at or below this threshold count as eliminated.
pub const ELIMINATED_EDGE_TOL: f64 = 1e-8;

/// Flow phases, as recorded in the trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Alpha,
    Constrained,
    Free,
}

impl Phase {
    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::Alpha => "alpha",
            Phase::Constrained => "constrained",
            Phase::Free => "free",
        }
    }
}

/// Flow parameters. `delta_eps = None` resolves to `0.05 * ||w1||` at run
/// time.
#[derive(Debug, Clone)]
pub struct FlowConfig {
    pub eps0: f64,
    pub delta_eps: Option<f64>,
    pub alpha_lo: f64,
    pub alpha_hi: f64,
    pub h0: f64,
    /// Step growth/shrink factor, `> 1`.
    pub beta_step: f64,
    pub f_tol: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    /// `mu_bar = mu_ratio * mu_2(initial)`.
    pub mu_ratio: f64,
    /// Bisection rounds refining the final `eps` interval.
    pub bisect_iters: usize,
    pub solver: SolverConfig,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            eps0: 1e-3,
            delta_eps: None,
            alpha_lo: 1.0,
            alpha_hi: 100.0,
            h0: 0.1,
            beta_step: 1.5,
            f_tol: 1e-6,
            max_outer: 100,
            max_inner: 2000,
            mu_ratio: 0.75,
            bisect_iters: 10,
            solver: SolverConfig::default(),
        }
    }
}

/// One recorded trial step.
#[derive(Debug, Clone)]
pub struct TrajectoryRow {
    pub step: usize,
    pub phase: Phase,
    pub eps: f64,
    pub f: f64,
    pub lambda_plus: f64,
    pub mu2: f64,
    pub norm_e: f64,
    pub h: f64,
    pub accepted: bool,
    /// Monotonicity segment: bumped on phase starts and on accepted steps
    /// that change the non-negativity support.
    pub segment: usize,
}

/// Mutable flow position (for reporting and partial results).
#[derive(Debug, Clone)]
pub struct FlowState {
    pub eps: f64,
    pub e: Perturbation,
    pub h: f64,
    pub f_val: f64,
    pub phase: Phase,
    pub accept_streak: usize,
}

/// Final report of a stability run.
#[derive(Debug, Clone)]
pub struct StabilityResult {
    /// Smallest found perturbation norm with `F <= f_tol`.
    pub eps_star: f64,
    /// Unit-norm perturbation direction at the optimum.
    pub e_star: Perturbation,
    pub f_star: f64,
    pub lambda_star: f64,
    pub mu2_star: f64,
    /// Canonical positions of edges with (numerically) zero final weight.
    pub eliminated_edges: Vec<usize>,
    pub betti_before: usize,
    pub betti_after: usize,
    pub converged: bool,
    /// Calibrated penalty weight from the alpha-phase.
    pub alpha: f64,
    pub mu_bar: f64,
    pub outer_iterations: usize,
    pub trajectory: Vec<TrajectoryRow>,
    pub stats: SolverStats,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub enum FlowError {
    /// Outer iteration cap reached with `F > f_tol`; carries the partial
    /// result (with `converged = false`).
    NotConverged(StabilityResult),
    /// Inner iteration cap reached without meeting any convergence test.
    MaxInnerIterations { phase: Phase, eps: f64 },
    Solver(SolverError),
    Weight(WeightError),
    /// Complex has no edges, or other unusable input.
    EmptyComplex,
}

impl core::fmt::Display for FlowError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            FlowError::NotConverged(r) => {
                write!(f, "not converged after {} outer iterations (F = {:e})", r.outer_iterations, r.f_star)
            }
            FlowError::MaxInnerIterations { phase, eps } => {
                write!(f, "inner iteration cap in {} phase at eps = {eps}", phase.as_str())
            }
            FlowError::Solver(e) => write!(f, "{e}"),
            FlowError::Weight(e) => write!(f, "{e}"),
            FlowError::EmptyComplex => write!(f, "complex has no edges"),
        }
    }
}

impl core::error::Error for FlowError {}

impl From<SolverError> for FlowError {
    fn from(e: SolverError) -> Self {
        FlowError::Solver(e)
    }
}

impl From<WeightError> for FlowError {
    fn from(e: WeightError) -> Self {
        FlowError::Weight(e)
    }
}

/// One evaluated flow point.
#[derive(Debug, Clone)]
struct Evaluation {
    bundle: LaplacianBundle,
    sp_lambda: SpectralPoint,
    sp_mu: SpectralPoint,
    f: f64,
    support: Vec<bool>,
    /// The up-Laplacian kernel grew beyond its declared dimension: the
    /// homology has effectively already changed at this point.
    kernel_grew: bool,
}

/// The full two-level engine. Holds the solvers (with their constant
/// preconditioners and warm starts), the trajectory, and the calibrated
/// functional parameters.
pub struct FlowEngine<'a> {
    complex: &'a SimplicialComplex,
    profile: &'a WeightProfile,
    cfg: FlowConfig,
    params: FunctionalParams,
    solver_l0: EigenSolver,
    solver_up: EigenSolver,
    /// Fixed kernel dimension of the up-Laplacian (`n - beta0 + beta1` of the
    /// initial complex).
    up_kernel_dim: usize,
    betti_before: (usize, usize),
    delta_eps: f64,
    state: FlowState,
    trajectory: Vec<TrajectoryRow>,
    step_counter: usize,
    segment: usize,
    warnings: Vec<String>,
    /// Penalty was active at some accepted step of the latest inner run.
    penalty_seen: bool,
}

impl core::fmt::Debug for FlowEngine<'_> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("FlowEngine")
            .field("eps", &self.state.eps)
            .field("f_val", &self.state.f_val)
            .finish()
    }
}

impl<'a> FlowEngine<'a> {
    pub fn new(
        complex: &'a SimplicialComplex,
        profile: &'a WeightProfile,
        cfg: FlowConfig,
    ) -> Result<Self, FlowError> {
        if complex.n_edges() == 0 {
            return Err(FlowError::EmptyComplex);
        }
        profile.validate(complex);
        let mut warnings = Vec::new();

        let betti_before = complex.betti_numbers();
        if betti_before.0 > 1 {
            warnings.push(String::from("initial graph is disconnected; mu_2 is taken past the extra kernel"));
        }
        let up_kernel_dim =
            complex.n_vertices() - betti_before.0 + betti_before.1;
        if up_kernel_dim >= complex.n_edges() {
            // No positive up-spectrum exists (no 2-simplices): there is no
            // lambda_+ to drive to zero.
            warnings.push(String::from(
                "the up-Laplacian has no positive spectrum (no triangles); the flow cannot create a hole",
            ));
        }

        let mut solver_l0 = EigenSolver::new(cfg.solver.clone());
        let mut solver_up = EigenSolver::new(cfg.solver.clone());

        // Initial (unperturbed) state fixes mu_bar and the constant
        // preconditioners.
        let zero = Perturbation::zeros(complex.n_edges());
        let pw0 = perturb(complex, profile, 0.0, &zero)?;
        let bundle0 = assemble(complex, &pw0);
        if cfg.solver.precond == Preconditioner::Ichol {
            solver_l0.set_preconditioner_from(&bundle0.l0)?;
            solver_up.set_preconditioner_from(&bundle0.l1_up)?;
        }

        let support0 = vec![true; complex.n_edges()];
        let (labels, n_comp) = complex.component_labels_masked(&support0);
        solver_l0.set_kernel_basis(l0_kernel_basis(&pw0.w0, &labels, n_comp));
        let sp_mu0 = solver_l0.solve(&bundle0.l0, n_comp)?;
        let mu_bar = cfg.mu_ratio * sp_mu0.value;
        if !(mu_bar > 0.0) {
            return Err(FlowError::Solver(SolverError::KernelDimMismatch {
                declared: n_comp,
                computed: n_comp + 1,
                point: Some(sp_mu0),
            }));
        }

        let params = FunctionalParams { alpha: cfg.alpha_lo, mu_bar };
        let state = FlowState {
            eps: cfg.eps0,
            e: zero,
            h: cfg.h0,
            f_val: f64::INFINITY,
            phase: Phase::Alpha,
            accept_streak: 0,
        };
        let delta_eps = cfg.delta_eps.unwrap_or(0.05 * sparse::nrm2(&profile.w1));

        Ok(Self {
            complex,
            profile,
            cfg,
            params,
            solver_l0,
            solver_up,
            up_kernel_dim,
            betti_before,
            delta_eps,
            state,
            trajectory: Vec::new(),
            step_counter: 0,
            segment: 0,
            warnings,
            penalty_seen: false,
        })
    }

    pub fn mu_bar(&self) -> f64 {
        self.params.mu_bar
    }

    pub fn state(&self) -> &FlowState {
        &self.state
    }

    /// Evaluate the functional at `(eps, e)`.
    fn evaluate(&mut self, eps: f64, e: &Perturbation) -> Result<Evaluation, FlowError> {
        let pw = perturb(self.complex, self.profile, eps, e)?;
        let bundle = assemble(self.complex, &pw);
        let support: Vec<bool> = pw.w1.iter().map(|&w| w > ZERO_WEIGHT_TOL).collect();

        let (labels, n_comp) = self.complex.component_labels_masked(&support);
        self.solver_l0.set_kernel_basis(l0_kernel_basis(&pw.w0, &labels, n_comp));
        let sp_mu = match self.solver_l0.solve(&bundle.l0, n_comp) {
            Ok(p) => p,
            // A near-zero second eigenvalue: almost disconnected. Use it.
            Err(SolverError::KernelDimMismatch { point: Some(p), .. }) => p,
            Err(e) => return Err(e.into()),
        };

        let (sp_lambda, kernel_grew) = match self.solver_up.solve(&bundle.l1_up, self.up_kernel_dim) {
            Ok(p) => (p, false),
            // The up-kernel grew: lambda_+ has effectively reached zero.
            Err(SolverError::KernelDimMismatch { point: Some(p), .. }) => (p, true),
            Err(e) => return Err(e.into()),
        };

        let f = eval_functional(sp_lambda.value.max(0.0), sp_mu.value.max(0.0), &self.params);
        Ok(Evaluation { bundle, sp_lambda, sp_mu, f, support, kernel_grew })
    }

    fn gradient(&self, eps: f64, e: &Perturbation, eval: &Evaluation) -> GradientInfo {
        let jac = weight_jacobians(self.complex, self.profile, &eval.bundle.weights);
        free_gradient(
            self.complex,
            self.profile,
            &eval.bundle,
            &eval.sp_lambda,
            &eval.sp_mu,
            &jac,
            &self.params,
            eps,
            e,
        )
    }

    fn record(&mut self, phase: Phase, eps: f64, eval: &Evaluation, e_norm: f64, h: f64, accepted: bool) {
        self.step_counter += 1;
        self.trajectory.push(TrajectoryRow {
            step: self.step_counter,
            phase,
            eps,
            f: eval.f,
            lambda_plus: eval.sp_lambda.value,
            mu2: eval.sp_mu.value,
            norm_e: e_norm,
            h,
            accepted,
            segment: self.segment,
        });
    }

    fn begin_segment(&mut self) {
        self.segment += 1;
    }

    /// Calibrate the penalty weight at `eps0`: run the constrained flow,
    /// growing `alpha` tenfold per round, until the minimizer stops moving or
    /// the cap is reached. Returns the calibrated `alpha` and the warm-start
    /// perturbation.
    pub fn alpha_phase(&mut self) -> Result<(f64, Perturbation), FlowError> {
        let eps0 = self.cfg.eps0;
        let m = self.complex.n_edges();
        let start = Perturbation::uniform_shrink(m);
        let mut e = project_sphere_box(&start.values, eps0, &self.profile.w1)
            .map(Perturbation::new)
            .unwrap_or(start);

        self.params.alpha = self.cfg.alpha_lo;
        let mut rounds = 0usize;
        loop {
            rounds += 1;
            let outcome = self.inner_flow(Phase::Alpha, eps0, e.clone())?;
            let moved = {
                let mut d = outcome.e.values.clone();
                sparse::axpy(-1.0, &e.values, &mut d);
                sparse::nrm2(&d)
            };
            e = outcome.e;
            self.state.f_val = outcome.f;

            // A run during which the penalty never activated is
            // alpha-independent: calibration is done after one round.
            if !self.penalty_seen && rounds == 1 {
                break;
            }
            if moved < 1e-8 && rounds > 1 {
                break;
            }
            if self.params.alpha >= self.cfg.alpha_hi {
                self.warnings.push(format!(
                    "alpha-phase hit the upper bound alpha = {}",
                    self.cfg.alpha_hi
                ));
                break;
            }
            self.params.alpha = (self.params.alpha * 10.0).min(self.cfg.alpha_hi);
        }
        Ok((self.params.alpha, e))
    }

    /// Constrained gradient flow at fixed `eps` from a unit-norm admissible
    /// perturbation. Stops on the global tolerance, on stationarity, or on an
    /// F-plateau; errors with `MaxInnerIterations` if the iteration cap is
    /// exhausted with none of the tests met.
    pub fn inner_constrained_flow(
        &mut self,
        eps: f64,
        e: Perturbation,
    ) -> Result<InnerOutcome, FlowError> {
        self.inner_flow(Phase::Constrained, eps, e)
    }

    fn inner_flow(&mut self, phase: Phase, eps: f64, e0: Perturbation) -> Result<InnerOutcome, FlowError> {
        self.begin_segment();
        self.penalty_seen = false;
        let mut e = e0;
        let mut eval = self.evaluate(eps, &e)?;
        let mut f = eval.f;
        self.note_penalty(&eval);
        let mut h = self.cfg.h0;
        self.record(phase, eps, &eval, e.norm(), h, true);
        self.sync_state(phase, eps, &e, f, h, 0);

        if f <= self.cfg.f_tol {
            return Ok(InnerOutcome { e, f, eval, stop: InnerStop::Tolerance });
        }

        let mut grad = self.gradient(eps, &e, &eval);
        let mut streak = 0usize;
        let mut plateau = 0usize;
        let h_floor = 1e-14 * self.cfg.h0;

        for _iter in 0..self.cfg.max_inner {
            if grad.degenerate {
                self.warn_once("degenerate eigenvalue encountered; gradient may be one-sided");
            }
            let pg_norm = sparse::nrm2(&grad.g_projected);
            if pg_norm <= 1e-15 {
                return Ok(InnerOutcome { e, f, eval, stop: InnerStop::Stationary });
            }
            // Stationarity by gradient alignment (only meaningful with the
            // penalty inactive).
            let hinge_active = eval.sp_mu.value < self.params.mu_bar;
            if !hinge_active && stationarity_measure(&e, &grad) < 1e-4 {
                return Ok(InnerOutcome { e, f, eval, stop: InnerStop::Stationary });
            }

            let dir = match constrained_direction(&e, &grad) {
                Ok(d) => d,
                Err(_) => {
                    self.warn_once("projected perturbation vanished; aborting inner flow");
                    return Ok(InnerOutcome { e, f, eval, stop: InnerStop::Stationary });
                }
            };

            // Two-step norm-corrected Euler trial.
            let mut half = e.values.clone();
            sparse::axpy(h, &dir, &mut half);
            let trial = match project_sphere_box(&half, eps, &self.profile.w1) {
                Some(v) => Perturbation::new(v),
                None => {
                    h = (h / self.cfg.beta_step).max(h_floor);
                    streak = 0;
                    if h <= h_floor {
                        return Ok(InnerOutcome { e, f, eval, stop: InnerStop::StepUnderflow });
                    }
                    continue;
                }
            };
            let eval_new = self.evaluate(eps, &trial)?;
            let accepted = eval_new.f < f;
            self.record(phase, eps, &eval_new, trial.norm(), h, accepted);

            if accepted {
                let support_changed = eval_new.support != eval.support;
                let df = f - eval_new.f;
                e = trial;
                f = eval_new.f;
                eval = eval_new;
                self.note_penalty(&eval);
                grad = self.gradient(eps, &e, &eval);
                if support_changed {
                    self.begin_segment();
                    streak = 0;
                } else {
                    streak += 1;
                    if streak >= 2 {
                        h *= self.cfg.beta_step;
                    }
                }
                self.sync_state(phase, eps, &e, f, h, streak);
                if f <= self.cfg.f_tol {
                    return Ok(InnerOutcome { e, f, eval, stop: InnerStop::Tolerance });
                }
                if df < 1e-9 * f.max(1e-300) {
                    plateau += 1;
                    if plateau >= 10 {
                        return Ok(InnerOutcome { e, f, eval, stop: InnerStop::Plateau });
                    }
                } else {
                    plateau = 0;
                }
            } else {
                h /= self.cfg.beta_step;
                streak = 0;
                self.state.accept_streak = 0;
                if h <= h_floor {
                    return Ok(InnerOutcome { e, f, eval, stop: InnerStop::StepUnderflow });
                }
            }
        }
        Err(FlowError::MaxInnerIterations { phase, eps })
    }

    /// Free gradient flow at fixed `eps` from `||e|| < 1`, growing the norm
    /// until the sphere is reached (or the functional hits the tolerance).
    pub fn free_transition(&mut self, eps: f64, e0: Perturbation) -> Result<InnerOutcome, FlowError> {
        self.begin_segment();
        let mut e = Perturbation::new(project_box(&e0.values, eps, &self.profile.w1));
        let mut eval = self.evaluate(eps, &e)?;
        let mut f = eval.f;
        self.note_penalty(&eval);
        let mut h = self.cfg.h0;
        self.record(Phase::Free, eps, &eval, e.norm(), h, true);
        self.sync_state(Phase::Free, eps, &e, f, h, 0);

        let mut grad = self.gradient(eps, &e, &eval);
        let mut streak = 0usize;
        let h_floor = 1e-14 * self.cfg.h0;

        for _iter in 0..self.cfg.max_inner {
            if f <= self.cfg.f_tol {
                return Ok(InnerOutcome { e, f, eval, stop: InnerStop::Tolerance });
            }
            if e.norm() >= 1.0 - 1e-10 {
                return Ok(InnerOutcome { e, f, eval, stop: InnerStop::SphereReached });
            }
            let dir = free_direction(&e, &grad);
            if sparse::nrm2(&dir) <= 1e-15 {
                return Ok(InnerOutcome { e, f, eval, stop: InnerStop::Stationary });
            }

            let mut half = e.values.clone();
            sparse::axpy(h, &dir, &mut half);
            // Clamp into the box; cap the norm at 1 (shrinking stays in the box).
            let mut vals = project_box(&half, eps, &self.profile.w1);
            let norm = sparse::nrm2(&vals);
            if norm > 1.0 {
                sparse::scale(1.0 / norm, &mut vals);
            }
            let trial = Perturbation::new(vals);
            let eval_new = self.evaluate(eps, &trial)?;
            let accepted = eval_new.f < f;
            self.record(Phase::Free, eps, &eval_new, trial.norm(), h, accepted);

            if accepted {
                let support_changed = eval_new.support != eval.support;
                e = trial;
                f = eval_new.f;
                eval = eval_new;
                self.note_penalty(&eval);
                grad = self.gradient(eps, &e, &eval);
                if support_changed {
                    self.begin_segment();
                    streak = 0;
                } else {
                    streak += 1;
                    if streak >= 2 {
                        h *= self.cfg.beta_step;
                    }
                }
                self.sync_state(Phase::Free, eps, &e, f, h, streak);
            } else {
                h /= self.cfg.beta_step;
                streak = 0;
                if h <= h_floor {
                    return Ok(InnerOutcome { e, f, eval, stop: InnerStop::StepUnderflow });
                }
            }
        }
        Err(FlowError::MaxInnerIterations { phase: Phase::Free, eps })
    }

    /// The complete stability run.
    pub fn run(&mut self) -> Result<StabilityResult, FlowError> {
        if self.up_kernel_dim >= self.complex.n_edges() {
            let e = Perturbation::zeros(self.complex.n_edges());
            let pw = perturb(self.complex, self.profile, 0.0, &e)?;
            let bundle = assemble(self.complex, &pw);
            let support = vec![true; self.complex.n_edges()];
            let (labels, n_comp) = self.complex.component_labels_masked(&support);
            self.solver_l0.set_kernel_basis(l0_kernel_basis(&pw.w0, &labels, n_comp));
            let sp_mu = self.solver_l0.solve(&bundle.l0, n_comp)?;
            let sp_lambda = SpectralPoint {
                value: f64::INFINITY,
                vector: vec![0.0; self.complex.n_edges()],
                residual: 0.0,
                multiplicity_flag: false,
            };
            let eval = Evaluation {
                bundle,
                sp_lambda,
                sp_mu,
                f: f64::INFINITY,
                support,
                kernel_grew: false,
            };
            let partial = self.build_result(self.cfg.eps0, &e, &eval, false, 0);
            return Err(FlowError::NotConverged(partial));
        }

        let (_alpha, mut e) = self.alpha_phase()?;
        let mut eps = self.cfg.eps0;
        let mut eval = self.evaluate(eps, &e)?;
        let mut f = eval.f;

        // Last known point with F above tolerance, for the bisection.
        let mut fail_point: Option<(f64, Perturbation)> = None;
        let mut outer = 0usize;

        loop {
            if f <= self.cfg.f_tol {
                match self.try_finish(eps, &e, &eval, fail_point.clone(), outer) {
                    Some(result) => return Ok(result),
                    None => {
                        self.warn_once(
                            "functional reached tolerance but the Betti verification failed; continuing",
                        );
                        // Squeeze further along the constrained flow before
                        // growing eps.
                        let tightened = self.squeeze(eps, e.clone())?;
                        e = tightened.e;
                        f = tightened.f;
                        eval = tightened.eval;
                        if f <= self.cfg.f_tol {
                            if let Some(result) =
                                self.try_finish(eps, &e, &eval, fail_point.clone(), outer)
                            {
                                return Ok(result);
                            }
                        }
                    }
                }
            }

            if outer >= self.cfg.max_outer {
                let partial = self.build_result(eps, &e, &eval, false, outer);
                return Err(FlowError::NotConverged(partial));
            }
            outer += 1;

            fail_point = Some((eps * e.norm().min(1.0), e.clone()));
            let eps_new = eps + self.delta_eps;
            let mut rescaled = e.values.clone();
            sparse::scale(eps / eps_new, &mut rescaled);
            let after_free = self.run_level(eps_new, Perturbation::new(rescaled))?;
            e = after_free.e;
            f = after_free.f;
            eval = after_free.eval;
            eps = eps_new;
        }
    }

    /// Free transition followed by the constrained flow at `eps`.
    fn run_level(&mut self, eps: f64, e0: Perturbation) -> Result<InnerOutcome, FlowError> {
        let freed = match self.free_transition(eps, e0) {
            Ok(o) => o,
            Err(FlowError::MaxInnerIterations { .. }) => {
                self.warn_once("free flow hit the inner iteration cap");
                let e = self.state.e.clone();
                let eval = self.evaluate(eps, &e)?;
                let f = eval.f;
                InnerOutcome { e, f, eval, stop: InnerStop::Plateau }
            }
            Err(e) => return Err(e),
        };
        if freed.f <= self.cfg.f_tol {
            return Ok(freed);
        }
        let on_sphere = match project_sphere_box(&freed.e.values, eps, &self.profile.w1) {
            Some(v) => Perturbation::new(v),
            None => freed.e.clone(),
        };
        match self.inner_flow(Phase::Constrained, eps, on_sphere) {
            Ok(o) => Ok(o),
            Err(FlowError::MaxInnerIterations { .. }) => {
                self.warn_once("constrained flow hit the inner iteration cap");
                let e = self.state.e.clone();
                let eval = self.evaluate(eps, &e)?;
                let f = eval.f;
                Ok(InnerOutcome { e, f, eval, stop: InnerStop::Plateau })
            }
            Err(e) => Err(e),
        }
    }

    /// Keep minimizing past the tolerance (plateau/stationarity stops only),
    /// used when the verification needs the weights driven further down.
    fn squeeze(&mut self, eps: f64, e: Perturbation) -> Result<InnerOutcome, FlowError> {
        let saved_tol = self.cfg.f_tol;
        self.cfg.f_tol = 0.0;
        let out = self.inner_flow(Phase::Constrained, eps, e);
        self.cfg.f_tol = saved_tol;
        match out {
            Ok(o) => Ok(o),
            Err(FlowError::MaxInnerIterations { .. }) => {
                let e = self.state.e.clone();
                let eval = self.evaluate(eps, &e)?;
                let f = eval.f;
                Ok(InnerOutcome { e, f, eval, stop: InnerStop::Plateau })
            }
            Err(e) => Err(e),
        }
    }

    /// Verify a success candidate and, if it holds, refine the final interval
    /// by bisection and build the result.
    fn try_finish(
        &mut self,
        eps: f64,
        e: &Perturbation,
        eval: &Evaluation,
        fail_point: Option<(f64, Perturbation)>,
        outer: usize,
    ) -> Option<StabilityResult> {
        self.verify(eval)?;
        let mut best = (eps, e.clone(), eval.clone());

        // Bisection refinement of [eps_lo, eps_hi].
        if let Some((mut eps_lo, mut e_lo)) = fail_point {
            let mut eps_hi = best.0 * best.1.norm().min(1.0);
            for _ in 0..self.cfg.bisect_iters {
                if eps_hi - eps_lo <= 1e-6 * eps_hi.max(1e-12) {
                    break;
                }
                let mid = 0.5 * (eps_lo + eps_hi);
                let mut rescaled = e_lo.values.clone();
                let lo_norm = e_lo.norm();
                if lo_norm > 0.0 {
                    sparse::scale((eps_lo / mid) / lo_norm.max(1.0), &mut rescaled);
                }
                let outcome = match self.run_level(mid, Perturbation::new(rescaled)) {
                    Ok(o) => o,
                    Err(_) => break,
                };
                if outcome.f <= self.cfg.f_tol && self.verify(&outcome.eval).is_some() {
                    eps_hi = mid * outcome.e.norm().min(1.0);
                    best = (mid, outcome.e, outcome.eval);
                } else {
                    eps_lo = mid;
                    e_lo = outcome.e;
                }
            }
        }

        let (eps_best, e_best, eval_best) = best;
        let result = self.build_result(eps_best, &e_best, &eval_best, true, outer);
        Some(result)
    }

    /// Exact-rank Betti verification of a success candidate; returns the
    /// eliminated edges when the reduced complex gained a hole.
    fn verify(&mut self, eval: &Evaluation) -> Option<Vec<usize>> {
        let eliminated: Vec<usize> = eval
            .bundle
            .weights
            .w1
            .iter()
            .enumerate()
            .filter(|&(_, &w)| w <= ELIMINATED_EDGE_TOL)
            .map(|(e, _)| e)
            .collect();
        if eliminated.is_empty() {
            return None;
        }
        let reduced = self.complex.remove_edges(&eliminated);
        let betti_after = reduced.betti_numbers().1;
        if betti_after > self.betti_before.1 {
            Some(eliminated)
        } else {
            None
        }
    }

    fn build_result(
        &mut self,
        eps: f64,
        e: &Perturbation,
        eval: &Evaluation,
        converged: bool,
        outer: usize,
    ) -> StabilityResult {
        let eliminated = if converged { self.verify(eval).unwrap_or_default() } else { Vec::new() };
        let betti_after = if converged {
            self.complex.remove_edges(&eliminated).betti_numbers().1
        } else {
            self.betti_before.1
        };

        // Pathological shared-edge configuration: warn, per the discussion of
        // stationary-point optimality.
        if converged && betti_after >= self.betti_before.1 + 2 {
            for &edge in &eliminated {
                let incident = (0..self.complex.n_triangles())
                    .filter(|&t| self.complex.triangle_edge_positions(t).contains(&edge))
                    .count();
                if incident >= 2 {
                    self.warnings.push(format!(
                        "eliminated edge {:?} is shared by {incident} triangles and {} new holes; optimality is not guaranteed for such configurations",
                        self.complex.edge_label(edge),
                        betti_after - self.betti_before.1,
                    ));
                    break;
                }
            }
        }

        let norm = e.norm();
        let mut stats = self.solver_l0.stats;
        stats.merge(&self.solver_up.stats);
        StabilityResult {
            eps_star: eps * norm.min(1.0),
            e_star: e.clone(),
            f_star: eval.f,
            lambda_star: eval.sp_lambda.value,
            mu2_star: eval.sp_mu.value,
            eliminated_edges: eliminated,
            betti_before: self.betti_before.1,
            betti_after,
            converged,
            alpha: self.params.alpha,
            mu_bar: self.params.mu_bar,
            outer_iterations: outer,
            trajectory: core::mem::take(&mut self.trajectory),
            stats,
            warnings: core::mem::take(&mut self.warnings),
        }
    }

    fn sync_state(&mut self, phase: Phase, eps: f64, e: &Perturbation, f: f64, h: f64, streak: usize) {
        self.state = FlowState { eps, e: e.clone(), h, f_val: f, phase, accept_streak: streak };
    }

    fn note_penalty(&mut self, eval: &Evaluation) {
        if eval.sp_mu.value < self.params.mu_bar {
            self.penalty_seen = true;
        }
    }

    fn warn_once(&mut self, msg: &str) {
        if self.warnings.iter().any(|w| w == msg) {
            return;
        }
        self.warnings.push(String::from(msg));
    }
}

/// Why an inner flow stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerStop {
    /// `F <= f_tol`.
    Tolerance,
    /// Gradient aligned with the perturbation (constrained stationary point).
    Stationary,
    /// Relative decrease below `1e-9` for ten consecutive accepted steps.
    Plateau,
    /// Step size shrank below the floor without an accepted step.
    StepUnderflow,
    /// Free flow reached the unit sphere.
    SphereReached,
}

/// Result of one inner-level run.
#[derive(Debug, Clone)]
pub struct InnerOutcome {
    pub e: Perturbation,
    pub f: f64,
    stop: InnerStop,
    eval: Evaluation,
}

impl InnerOutcome {
    pub fn stop(&self) -> InnerStop {
        self.stop
    }

    pub fn lambda_plus(&self) -> f64 {
        self.eval.sp_lambda.value
    }

    pub fn mu2(&self) -> f64 {
        self.eval.sp_mu.value
    }

    pub fn kernel_grew(&self) -> bool {
        self.eval.kernel_grew
    }
}

/// Kernel basis of the weighted graph Laplacian: per component `C`, the
/// vector `sqrt(w0)` restricted to `C`, normalized.
fn l0_kernel_basis(w0: &[f64], labels: &[usize], n_comp: usize) -> Vec<Vec<f64>> {
    let n = w0.len();
    let mut basis = vec![vec![0.0; n]; n_comp];
    for v in 0..n {
        basis[labels[v]][v] = libm::sqrt(w0[v]);
    }
    for b in basis.iter_mut() {
        sparse::normalize(b);
    }
    basis
}

/// Clamp into the admissible box `W1 + eps E >= 0`.
fn project_box(values: &[f64], eps: f64, w1: &[f64]) -> Vec<f64> {
    values
        .iter()
        .zip(w1)
        .map(|(&v, &w)| {
            let lower = -w / eps;
            if v < lower {
                lower
            } else {
                v
            }
        })
        .collect()
}

/// Alternating projection onto the unit sphere intersected with the
/// admissible box. Returns `None` if the alternation fails to satisfy both
/// constraints to `1e-12`.
fn project_sphere_box(values: &[f64], eps: f64, w1: &[f64]) -> Option<Vec<f64>> {
    let mut v = values.to_vec();
    for _ in 0..200 {
        v = project_box(&v, eps, w1);
        let n = sparse::nrm2(&v);
        if n <= 1e-300 {
            return None;
        }
        sparse::scale(1.0 / n, &mut v);
        let admissible = v
            .iter()
            .zip(w1)
            .all(|(&x, &w)| w + eps * x >= -1e-12 * (1.0 + w));
        if admissible {
            return Some(v);
        }
    }
    None
}

/// Compute the smallest edge-weight perturbation (in Frobenius norm) that
/// raises the first Betti number of the weighted complex.
pub fn run_stability(
    c: &SimplicialComplex,
    profile: &WeightProfile,
    cfg: FlowConfig,
) -> Result<StabilityResult, FlowError> {
    FlowEngine::new(c, profile, cfg)?.run()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_projection_clamps() {
        let w1 = [1.0, 0.5];
        let v = project_box(&[-3.0, 0.2], 1.0, &w1);
        assert_eq!(v, vec![-1.0, 0.2]);
    }

    #[test]
    fn sphere_box_projection_satisfies_both() {
        let w1 = [1.0, 0.5, 0.25];
        let v = project_sphere_box(&[-5.0, 1.0, -4.0], 0.5, &w1).unwrap();
        let norm: f64 = sparse::nrm2(&v);
        assert!((norm - 1.0).abs() < 1e-12);
        for (x, w) in v.iter().zip(&w1) {
            assert!(w + 0.5 * x >= -1e-12);
        }
    }

    #[test]
    fn uniform_shrink_is_unit_norm() {
        let e = Perturbation::uniform_shrink(16);
        assert!((e.norm() - 1.0).abs() < 1e-12);
    }
}
