//! Coupled weights of the perturbed complex.
//!
//! An edge perturbation `eps * E` moves the edge weights `w1`; the vertex and
//! triangle weights follow. Vertex weights are the perturbed weighted degree
//! plus a constant shift `rho > 0`, which keeps the graph Laplacian responsive
//! to edges approaching zero. Triangle weights are rescaled by a coupling
//! function of the relative edge perturbations `u_e = delta_w1(e) / w1(e)`
//! that equals one at zero perturbation and decays to zero as any incident
//! edge weight vanishes, so that faux edges drop out of the up-Laplacian at
//! matching order.

use alloc::vec;
use alloc::vec::Vec;

use crate::complex::SimplicialComplex;
use crate::functional::Perturbation;

/// Tolerance below which a perturbed weight counts as zero.
pub const ZERO_WEIGHT_TOL: f64 = 1e-12;

/// Admissibility violations when applying a perturbation.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightError {
    /// `w1 + eps * E` went negative on some edge.
    NegativeWeight { edge: usize, value: f64 },
}

impl core::fmt::Display for WeightError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            WeightError::NegativeWeight { edge, value } => {
                write!(f, "perturbed weight of edge {edge} is negative ({value:e})")
            }
        }
    }
}

impl core::error::Error for WeightError {}

/// Initial weight data of a complex: positive edge weights, the vertex-weight
/// shift `rho`, and initial triangle weights.
#[derive(Debug, Clone)]
pub struct WeightProfile {
    /// Initial edge weights, aligned with the canonical edge order.
    pub w1: Vec<f64>,
    /// Vertex-weight shift; strictly positive.
    pub rho: f64,
    /// Initial triangle weights, aligned with the canonical triangle order.
    pub w2: Vec<f64>,
}

impl WeightProfile {
    /// Unit edge and triangle weights with the default shift `rho = 1`.
    pub fn unit(c: &SimplicialComplex) -> Self {
        Self { w1: vec![1.0; c.n_edges()], rho: 1.0, w2: vec![1.0; c.n_triangles()] }
    }

    /// Given edge weights, unit triangle weights, default `rho = 1`.
    pub fn from_edge_weights(c: &SimplicialComplex, w1: Vec<f64>) -> Self {
        assert_eq!(w1.len(), c.n_edges());
        Self { w1, rho: 1.0, w2: vec![1.0; c.n_triangles()] }
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        assert!(rho > 0.0, "rho must be positive");
        self.rho = rho;
        self
    }

    pub fn validate(&self, c: &SimplicialComplex) {
        assert_eq!(self.w1.len(), c.n_edges());
        assert_eq!(self.w2.len(), c.n_triangles());
        assert!(self.rho > 0.0);
        assert!(self.w1.iter().all(|&w| w > 0.0), "initial edge weights must be positive");
        assert!(self.w2.iter().all(|&w| w > 0.0), "initial triangle weights must be positive");
    }
}

/// The coupled weight triple after applying `w1 -> w1 + eps * E`.
#[derive(Debug, Clone)]
pub struct PerturbedWeights {
    /// Perturbed edge weights, entrywise `>= 0`.
    pub w1: Vec<f64>,
    /// Perturbed vertex weights `sum_j w1(ij) + rho`, entrywise `>= rho`.
    pub w0: Vec<f64>,
    /// Perturbed triangle weights `f(u) * w2`.
    pub w2: Vec<f64>,
    /// Relative perturbations `u_e = delta_w1(e) / w1(e)`.
    pub u: Vec<f64>,
}

impl PerturbedWeights {
    /// Edges whose perturbed weight is numerically zero.
    pub fn dead_edges(&self) -> Vec<usize> {
        (0..self.w1.len()).filter(|&e| self.w1[e] <= ZERO_WEIGHT_TOL).collect()
    }
}

/// Coupling factor `f(u) = 1 + min(0, min_i u_i)`: equals 1 at zero
/// perturbation, decays linearly to 0 as the most-decreased incident edge
/// approaches `u = -1`, and is clamped at 1 for weight increases.
fn coupling(u_min: f64) -> f64 {
    (1.0 + u_min.min(0.0)).max(0.0)
}

/// Apply the perturbation `w1 -> w1 + eps * E` and derive the coupled
/// vertex and triangle weights.
pub fn perturb(
    c: &SimplicialComplex,
    p: &WeightProfile,
    eps: f64,
    e: &Perturbation,
) -> Result<PerturbedWeights, WeightError> {
    let m = c.n_edges();
    assert_eq!(e.values.len(), m);
    let mut w1 = vec![0.0; m];
    let mut u = vec![0.0; m];
    for i in 0..m {
        let delta = eps * e.values[i];
        let v = p.w1[i] + delta;
        // Projection rounding can leave weights a hair below zero; anything
        // beyond that slack is a genuine admissibility violation.
        if v < -1e-9 * (1.0 + p.w1[i]) {
            return Err(WeightError::NegativeWeight { edge: i, value: v });
        }
        w1[i] = v.max(0.0);
        u[i] = (w1[i] - p.w1[i]) / p.w1[i];
    }

    let mut w0 = vec![p.rho; c.n_vertices()];
    for (i, &(a, b)) in c.edges().iter().enumerate() {
        w0[a as usize] += w1[i];
        w0[b as usize] += w1[i];
    }

    let mut w2 = vec![0.0; c.n_triangles()];
    for t in 0..c.n_triangles() {
        let faces = c.triangle_edge_positions(t);
        let u_min = faces.iter().map(|&f| u[f]).fold(f64::INFINITY, f64::min);
        w2[t] = coupling(u_min) * p.w2[t];
        // Exact suppression once any incident edge weight is gone.
        if faces.iter().any(|&f| w1[f] <= ZERO_WEIGHT_TOL) {
            w2[t] = 0.0;
        }
    }

    Ok(PerturbedWeights { w1, w0, w2, u })
}

/// Jacobians of the derived weights with respect to the perturbed edge
/// weights.
///
/// The vertex-weight Jacobian is the incidence pattern (entry 1 whenever the
/// vertex lies on the edge) and is applied implicitly through the complex.
/// The triangle-weight Jacobian has a single nonzero per triangle, at the
/// arg-min edge of the coupling; ties go to the lexicographically smallest
/// edge and clamped triangles (all relative perturbations positive) have an
/// empty column.
#[derive(Debug, Clone)]
pub struct WeightJacobians {
    /// Per triangle: `(edge position, d w2_tilde / d w1_tilde(edge))`,
    /// `None` when the coupling is clamped at 1.
    pub j12: Vec<Option<(usize, f64)>>,
}

impl WeightJacobians {
    /// Entry of the vertex-weight Jacobian `J10[e, v]`.
    pub fn j10_entry(c: &SimplicialComplex, e: usize, v: usize) -> f64 {
        let (a, b) = c.edges()[e];
        if a as usize == v || b as usize == v {
            1.0
        } else {
            0.0
        }
    }

    /// Entry of the triangle-weight Jacobian `J12[e, t]`.
    pub fn j12_entry(&self, e: usize, t: usize) -> f64 {
        match self.j12[t] {
            Some((edge, value)) if edge == e => value,
            _ => 0.0,
        }
    }

    /// Accumulate `J10 * x` over vertices into a per-edge vector.
    pub fn j10_apply(c: &SimplicialComplex, x: &[f64]) -> Vec<f64> {
        c.edges().iter().map(|&(a, b)| x[a as usize] + x[b as usize]).collect()
    }

    /// Accumulate `J12 * y` over triangles into a per-edge vector.
    pub fn j12_apply(&self, n_edges: usize, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; n_edges];
        for (t, entry) in self.j12.iter().enumerate() {
            if let Some((edge, value)) = entry {
                out[*edge] += value * y[t];
            }
        }
        out
    }
}

/// Differentiate the weight coupling at the given perturbed state.
pub fn weight_jacobians(
    c: &SimplicialComplex,
    p: &WeightProfile,
    pw: &PerturbedWeights,
) -> WeightJacobians {
    let mut j12 = Vec::with_capacity(c.n_triangles());
    for t in 0..c.n_triangles() {
        let faces = c.triangle_edge_positions(t);
        // Arg-min of u over the faces, ties to the smallest edge position.
        let mut best = faces[0];
        for &f in &faces[1..] {
            let better = pw.u[f] < pw.u[best] || (pw.u[f] == pw.u[best] && f < best);
            if better {
                best = f;
            }
        }
        if pw.u[best] > 0.0 {
            j12.push(None); // coupling clamped at 1
        } else {
            j12.push(Some((best, p.w2[t] / p.w1[best])));
        }
    }
    WeightJacobians { j12 }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig1() -> SimplicialComplex {
        let vertices: Vec<i64> = (1..=7).collect();
        let edges = [(1, 2), (1, 3), (2, 3), (2, 4), (3, 5), (4, 5), (4, 6), (4, 7), (5, 6), (6, 7)];
        let triangles = [(1, 2, 3), (4, 5, 6), (4, 6, 7)];
        SimplicialComplex::build(&vertices, &edges, Some(&triangles)).unwrap()
    }

    #[test]
    fn zero_perturbation_is_identity() {
        let c = fig1();
        let p = WeightProfile::unit(&c);
        let e = Perturbation::zeros(c.n_edges());
        let pw = perturb(&c, &p, 0.3, &e).unwrap();
        assert_eq!(pw.w1, p.w1);
        assert_eq!(pw.w2, p.w2);
        for v in 0..c.n_vertices() {
            assert_eq!(pw.w0[v], c.degree(v) as f64 + 1.0);
        }
    }

    #[test]
    fn driving_edge_to_zero_kills_incident_triangles() {
        let c = fig1();
        let p = WeightProfile::unit(&c);
        let e46 = c.edge_position_by_label(4, 6).unwrap();
        let mut vals = vec![0.0; c.n_edges()];
        vals[e46] = -1.0 / 0.5; // eps = 0.5 drives the weight to zero
        let e = Perturbation::new(vals);
        let pw = perturb(&c, &p, 0.5, &e).unwrap();
        assert_eq!(pw.w1[e46], 0.0);
        let t456 = c.triangle_position(3, 4, 5).unwrap();
        let t467 = c.triangle_position(3, 5, 6).unwrap();
        let t123 = c.triangle_position(0, 1, 2).unwrap();
        assert_eq!(pw.w2[t456], 0.0);
        assert_eq!(pw.w2[t467], 0.0);
        assert_eq!(pw.w2[t123], 1.0);
    }

    #[test]
    fn half_decrease_halves_incident_triangle_weights() {
        // eps = 0.5, E = -1 on edge (4,6): u = -0.5, triangles 456 and 467
        // drop to 0.5, triangle 123 keeps 1.
        let c = fig1();
        let p = WeightProfile::unit(&c);
        let e46 = c.edge_position_by_label(4, 6).unwrap();
        let mut vals = vec![0.0; c.n_edges()];
        vals[e46] = -1.0;
        let pw = perturb(&c, &p, 0.5, &Perturbation::new(vals)).unwrap();
        assert!((pw.u[e46] + 0.5).abs() < 1e-15);
        let t456 = c.triangle_position(3, 4, 5).unwrap();
        let t467 = c.triangle_position(3, 5, 6).unwrap();
        let t123 = c.triangle_position(0, 1, 2).unwrap();
        assert!((pw.w2[t456] - 0.5).abs() < 1e-15);
        assert!((pw.w2[t467] - 0.5).abs() < 1e-15);
        assert_eq!(pw.w2[t123], 1.0);
    }

    #[test]
    fn inadmissible_perturbation_errors() {
        let c = fig1();
        let p = WeightProfile::unit(&c);
        let mut vals = vec![0.0; c.n_edges()];
        vals[0] = -1.0;
        let err = perturb(&c, &p, 1.5, &Perturbation::new(vals));
        assert!(matches!(err, Err(WeightError::NegativeWeight { edge: 0, .. })));
    }

    #[test]
    fn j10_is_incidence() {
        let c = fig1();
        for e in 0..c.n_edges() {
            let (a, b) = c.edges()[e];
            for v in 0..c.n_vertices() {
                let expect = if v as u32 == a || v as u32 == b { 1.0 } else { 0.0 };
                assert_eq!(WeightJacobians::j10_entry(&c, e, v), expect);
            }
        }
    }

    #[test]
    fn j12_unique_argmin() {
        let c = fig1();
        let mut p = WeightProfile::unit(&c);
        p.w2 = vec![2.0; c.n_triangles()];
        let e46 = c.edge_position_by_label(4, 6).unwrap();
        let mut vals = vec![0.0; c.n_edges()];
        vals[e46] = -0.4;
        let pw = perturb(&c, &p, 0.5, &Perturbation::new(vals)).unwrap();
        let jac = weight_jacobians(&c, &p, &pw);
        let t456 = c.triangle_position(3, 4, 5).unwrap();
        // d w2(t) / d w1(e*) = w2(t) / w1(e*) at the arg-min edge.
        assert_eq!(jac.j12_entry(e46, t456), 2.0);
        for e in 0..c.n_edges() {
            if e != e46 {
                assert_eq!(jac.j12_entry(e, t456), 0.0);
            }
        }
    }

    #[test]
    fn j12_tie_breaks_lexicographically() {
        let c = fig1();
        let p = WeightProfile::unit(&c);
        let pw = perturb(&c, &p, 0.1, &Perturbation::zeros(c.n_edges())).unwrap();
        let jac = weight_jacobians(&c, &p, &pw);
        for t in 0..c.n_triangles() {
            let faces = c.triangle_edge_positions(t);
            let expected = *faces.iter().min().unwrap();
            assert_eq!(jac.j12[t], Some((expected, 1.0)));
        }
    }

    #[test]
    fn clamped_triangles_have_empty_column() {
        let c = fig1();
        let p = WeightProfile::unit(&c);
        let vals = vec![1.0; c.n_edges()]; // uniform increase
        let pw = perturb(&c, &p, 0.2, &Perturbation::new(vals)).unwrap();
        assert_eq!(pw.w2, p.w2); // clamp keeps triangle weights at 1
        let jac = weight_jacobians(&c, &p, &pw);
        assert!(jac.j12.iter().all(|j| j.is_none()));
    }
}
