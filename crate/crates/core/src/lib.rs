//! Topological stability of weighted order-2 simplicial complexes.
//!
//! This crate computes the smallest norm of an edge-weight perturbation that
//! increases the dimension of the first homology group of a simplicial
//! complex (i.e. creates a new 1-dimensional hole). The search is a bilevel
//! gradient flow on a spectral functional of the weighted Hodge Laplacian:
//! an inner constrained flow minimizes the functional over unit-norm
//! admissible perturbations at fixed norm budget, and an outer continuation
//! grows the budget until the functional vanishes.
//!
//! The crate is `no_std`-compatible (it only needs `alloc`); all file formats,
//! command-line tooling and timing live in the companion `holostab` crate.
//!
//! Main entry points:
//!
//! * [`SimplicialComplex`] — validated, canonically ordered complexes with
//!   signed boundary matrices and Betti numbers.
//! * [`WeightProfile`] / [`PerturbedWeights`] — the coupled weight triple
//!   under edge perturbations.
//! * [`LaplacianBundle`] — assembled normalized Laplacians.
//! * [`run_stability`] — the full two-level flow returning the minimal
//!   perturbation norm and the eliminated edges.

#![cfg_attr(not(any(test, feature = "std")), no_std)]
#![deny(missing_debug_implementations)]

extern crate alloc;

#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod complex;
pub mod dense;
pub mod flow;
pub mod functional;
pub mod laplacian;
pub mod rank;
pub mod rng;
pub mod solver;
pub mod sparse;
pub mod weights;

pub mod bench;
pub mod delaunay;

pub use complex::{BoundaryMatrix, ComplexError, SimplicialComplex};
pub use flow::{run_stability, FlowConfig, FlowError, FlowState, Phase, StabilityResult, TrajectoryRow};
pub use functional::{FunctionalParams, GradientInfo, Perturbation};
pub use laplacian::LaplacianBundle;
pub use solver::{SolverConfig, SolverError, SolverMode, SolverStats, SpectralPoint};
pub use weights::{PerturbedWeights, WeightError, WeightJacobians, WeightProfile};
