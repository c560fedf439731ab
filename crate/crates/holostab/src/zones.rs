//! Zone lifting: from a road network to a weighted simplicial complex.
//!
//! The zone graph starts complete, weighted by shortest-path travel times
//! (averaged over the two directions). Excessively distant pairs are dropped
//! at a time quantile, degenerate triangles lose their longest edge (a trip
//! along it always routes through the other two), zero-demand edges are
//! dropped, and the surviving edges are weighted by logarithmically scaled
//! symmetric travel demand. Triangles are the 3-cliques of the result.

use std::path::Path;

use holostab_core::complex::SimplicialComplex;
use holostab_core::dense::sym_eigen_csr;
use holostab_core::flow::{run_stability, FlowConfig, FlowError, StabilityResult};
use holostab_core::functional::Perturbation;
use holostab_core::laplacian::assemble;
use holostab_core::weights::{perturb, WeightProfile};
use rayon::prelude::*;

use crate::tntp::{dijkstra, RoadNetwork, TntpError};

/// Relative tolerance deciding that a triangle is metrically degenerate.
const DEGENERATE_REL_TOL: f64 = 1e-9;

/// A lifted zone complex with its provenance.
#[derive(Debug, Clone)]
pub struct ZoneComplex {
    pub complex: SimplicialComplex,
    pub profile: WeightProfile,
    /// Per-edge shortest-path time, aligned with the canonical edge order.
    pub edge_times: Vec<f64>,
    /// Per-edge raw symmetric demand.
    pub edge_demands: Vec<f64>,
    /// The time threshold realized by the filter quantile.
    pub time_threshold: f64,
}

/// Lift the road network to its zone complex.
pub fn lift_to_zones(rn: &RoadNetwork, filter_quantile: f64) -> Result<ZoneComplex, TntpError> {
    assert!((0.0..=1.0).contains(&filter_quantile));
    let nz = rn.n_zones;

    // Shortest-path times from every zone, in parallel.
    let dists: Vec<Vec<f64>> = (1..=nz).into_par_iter().map(|z| dijkstra(rn, z)).collect();

    let mut pair_time = vec![f64::INFINITY; nz * nz];
    let mut all_times = Vec::with_capacity(nz * (nz - 1) / 2);
    for i in 0..nz {
        for j in (i + 1)..nz {
            let forward = dists[i][j + 1];
            let backward = dists[j][i + 1];
            if !forward.is_finite() || !backward.is_finite() {
                return Err(TntpError::DisconnectedZones { from: i + 1, to: j + 1 });
            }
            // Average of the two directions keeps the triangle inequality.
            let t = 0.5 * (forward + backward);
            pair_time[i * nz + j] = t;
            all_times.push(t);
        }
    }

    // Time filter at the requested quantile (nearest-rank).
    all_times.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let idx = ((all_times.len() - 1) as f64 * filter_quantile).round() as usize;
    let threshold = all_times[idx];

    let mut edges: Vec<(usize, usize)> = Vec::new();
    for i in 0..nz {
        for j in (i + 1)..nz {
            if pair_time[i * nz + j] <= threshold {
                edges.push((i, j));
            }
        }
    }

    // Degenerate-triangle pruning: in any triangle whose longest side equals
    // the sum of the other two, the longest edge is redundant. An edge is
    // removed if it is degenerate in any triangle.
    let present = |edges: &[(usize, usize)], a: usize, b: usize| {
        edges.binary_search(&(a.min(b), a.max(b))).is_ok()
    };
    edges.sort_unstable();
    let mut removed = vec![false; edges.len()];
    for (idx_ab, &(a, b)) in edges.iter().enumerate() {
        for c in 0..nz {
            if c == a || c == b || !present(&edges, a, c) || !present(&edges, b, c) {
                continue;
            }
            let t_ab = pair_time[a * nz + b];
            let t_ac = pair_time[a.min(c) * nz + a.max(c)];
            let t_bc = pair_time[b.min(c) * nz + b.max(c)];
            // Is (a, b) the longest side, and degenerate?
            if t_ab >= t_ac && t_ab >= t_bc && (t_ab - (t_ac + t_bc)).abs() <= DEGENERATE_REL_TOL * t_ab {
                removed[idx_ab] = true;
                break;
            }
        }
    }
    let mut survivors: Vec<(usize, usize)> = edges
        .iter()
        .zip(&removed)
        .filter(|&(_, &r)| !r)
        .map(|(&e, _)| e)
        .collect();

    // Zero-demand edges cannot carry a positive weight: drop them before the
    // log transform.
    survivors.retain(|&(i, j)| rn.symmetric_demand(i + 1, j + 1) > 0.0);

    let min_demand = survivors
        .iter()
        .map(|&(i, j)| rn.symmetric_demand(i + 1, j + 1))
        .fold(f64::INFINITY, f64::min);

    let vertices: Vec<i64> = (1..=nz as i64).collect();
    let edge_labels: Vec<(i64, i64)> =
        survivors.iter().map(|&(i, j)| ((i + 1) as i64, (j + 1) as i64)).collect();
    let complex = SimplicialComplex::build(&vertices, &edge_labels, None)
        .expect("lifted zone complex is valid");

    let mut w1 = vec![0.0; complex.n_edges()];
    let mut edge_times = vec![0.0; complex.n_edges()];
    let mut edge_demands = vec![0.0; complex.n_edges()];
    for &(i, j) in &survivors {
        let pos = complex
            .edge_position_by_label((i + 1) as i64, (j + 1) as i64)
            .expect("survivor edge present");
        let demand = rn.symmetric_demand(i + 1, j + 1);
        w1[pos] = (demand / (0.95 * min_demand)).log10();
        edge_times[pos] = pair_time[i * nz + j];
        edge_demands[pos] = demand;
    }
    let profile = WeightProfile::from_edge_weights(&complex, w1);

    Ok(ZoneComplex { complex, profile, edge_times, edge_demands, time_threshold: threshold })
}

/// Stability report of a zone complex.
#[derive(Debug)]
pub struct ZoneReport {
    pub result: StabilityResult,
    /// Zone-pair labels of the eliminated edges.
    pub eliminated_pairs: Vec<(i64, i64)>,
    /// `eps* / sum_e w1(e)`: the perturbation as a share of the total weight.
    pub percentile: f64,
    /// Rank of the cheapest eliminated edge in the ascending weight order
    /// (1-based), mirroring the "k-th smallest" presentation.
    pub weight_rank: Option<usize>,
    /// Support of the newly created harmonic flow: edges with a significant
    /// entry in the kernel direction orthogonal to the original harmonics.
    pub new_hole_support: Vec<(i64, i64)>,
}

/// Run the stability flow on a lifted complex.
pub fn stability_report(zc: &ZoneComplex, cfg: FlowConfig) -> Result<ZoneReport, FlowError> {
    let result = run_stability(&zc.complex, &zc.profile, cfg)?;
    let eliminated_pairs: Vec<(i64, i64)> =
        result.eliminated_edges.iter().map(|&e| zc.complex.edge_label(e)).collect();
    let total_weight: f64 = zc.profile.w1.iter().sum();
    let percentile = result.eps_star / total_weight;

    let weight_rank = result
        .eliminated_edges
        .iter()
        .map(|&e| zc.profile.w1.iter().filter(|&&w| w <= zc.profile.w1[e]).count())
        .min();

    let new_hole_support = harmonic_difference_support(zc, &result);

    Ok(ZoneReport { result, eliminated_pairs, percentile, weight_rank, new_hole_support })
}

/// Edges carrying the new harmonic flow: kernel vectors of the reduced
/// complex's Hodge Laplacian, projected against the original harmonic space.
fn harmonic_difference_support(zc: &ZoneComplex, result: &StabilityResult) -> Vec<(i64, i64)> {
    if !result.converged || result.eliminated_edges.is_empty() {
        return Vec::new();
    }
    let harmonics = |c: &SimplicialComplex, profile: &WeightProfile| -> Vec<Vec<f64>> {
        let pw = perturb(c, profile, 0.0, &Perturbation::zeros(c.n_edges())).unwrap();
        let bundle = assemble(c, &pw);
        let l1 = bundle.l1();
        let eig = sym_eigen_csr(&l1).expect("harmonic eigendecomposition");
        (0..l1.nrows())
            .take_while(|&k| eig.values[k] < 1e-10)
            .map(|k| eig.eigenvector(k))
            .collect()
    };

    let reduced = zc.complex.remove_edges(&result.eliminated_edges);
    let reduced_profile = WeightProfile::from_edge_weights(
        &reduced,
        (0..reduced.n_edges())
            .map(|e| {
                let (a, b) = reduced.edge_label(e);
                zc.profile.w1[zc.complex.edge_position_by_label(a, b).unwrap()]
            })
            .collect(),
    );
    let new_harmonics = harmonics(&reduced, &reduced_profile);
    if new_harmonics.is_empty() {
        return Vec::new();
    }

    // Restrict the original harmonics to the surviving edges and project
    // them out of each new harmonic; the residual with the largest norm is
    // the created flow.
    let old_harmonics = harmonics(&zc.complex, &zc.profile);
    let restricted: Vec<Vec<f64>> = old_harmonics
        .iter()
        .map(|h| {
            (0..reduced.n_edges())
                .map(|e| {
                    let (a, b) = reduced.edge_label(e);
                    h[zc.complex.edge_position_by_label(a, b).unwrap()]
                })
                .collect()
        })
        .collect();

    let mut best: Option<(f64, Vec<f64>)> = None;
    for h in &new_harmonics {
        let mut resid = h.clone();
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for r in &restricted {
            let mut v = r.clone();
            for b in &basis {
                let c = holostab_core::sparse::dot(&v, b);
                holostab_core::sparse::axpy(-c, b, &mut v);
            }
            if holostab_core::sparse::normalize(&mut v) > 1e-10 {
                basis.push(v);
            }
        }
        for b in &basis {
            let c = holostab_core::sparse::dot(&resid, b);
            holostab_core::sparse::axpy(-c, b, &mut resid);
        }
        let norm = holostab_core::sparse::nrm2(&resid);
        if best.as_ref().map(|(n, _)| norm > *n).unwrap_or(true) {
            best = Some((norm, resid));
        }
    }

    let Some((norm, resid)) = best else { return Vec::new() };
    if norm < 1e-8 {
        return Vec::new();
    }
    let peak = resid.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    (0..reduced.n_edges())
        .filter(|&e| resid[e].abs() >= 0.2 * peak)
        .map(|e| reduced.edge_label(e))
        .collect()
}

/// Sweep filter quantiles and report `(quantile, n, m, triangles)` for each,
/// used to calibrate against published network sizes.
pub fn filtration_sweep(rn: &RoadNetwork, quantiles: &[f64]) -> Vec<(f64, usize, usize, usize)> {
    quantiles
        .iter()
        .filter_map(|&q| {
            lift_to_zones(rn, q).ok().map(|zc| {
                (q, zc.complex.n_vertices(), zc.complex.n_edges(), zc.complex.n_triangles())
            })
        })
        .collect()
}

/// Convenience: lift directly from files.
pub fn ingest(net: &Path, trips: &Path, quantile: f64) -> Result<ZoneComplex, TntpError> {
    let rn = crate::tntp::parse_tntp(net, trips)?;
    lift_to_zones(&rn, quantile)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tntp::Link;
    use std::collections::BTreeMap;

    /// Three zones on a line: 1 -- 2 -- 3, so t(1,3) = t(1,2) + t(2,3).
    fn collinear_network() -> RoadNetwork {
        let mut links = Vec::new();
        for (a, b, t) in [(1usize, 2usize, 1.0f64), (2, 3, 2.0)] {
            links.push(Link { from: a, to: b, free_flow_time: t });
            links.push(Link { from: b, to: a, free_flow_time: t });
        }
        let mut trips = BTreeMap::new();
        for (a, b) in [(1usize, 2usize), (2, 3), (1, 3)] {
            trips.insert((a, b), 5.0);
            trips.insert((b, a), 5.0);
        }
        RoadNetwork { n_zones: 3, n_nodes: 3, first_thru_node: 1, links, trips }
    }

    #[test]
    fn degenerate_triangle_loses_longest_edge() {
        let rn = collinear_network();
        let zc = lift_to_zones(&rn, 1.0).unwrap();
        // The (1,3) edge has t = 3 = 1 + 2 exactly: removed.
        assert_eq!(zc.complex.n_edges(), 2);
        assert!(zc.complex.edge_position_by_label(1, 3).is_none());
        assert_eq!(zc.complex.n_triangles(), 0);
    }

    #[test]
    fn uniform_demand_gives_uniform_log_weight() {
        let rn = collinear_network();
        let zc = lift_to_zones(&rn, 1.0).unwrap();
        let expect = (1.0f64 / 0.95).log10();
        for &w in &zc.profile.w1 {
            assert!((w - expect).abs() < 1e-12, "{w} vs {expect}");
        }
    }

    #[test]
    fn triangle_inequality_holds_on_zone_times() {
        let rn = collinear_network();
        let zc = lift_to_zones(&rn, 1.0).unwrap();
        let _ = zc;
        // Recompute the pair times directly and check the inequality.
        let d1 = dijkstra(&rn, 1);
        let d2 = dijkstra(&rn, 2);
        let d3 = dijkstra(&rn, 3);
        let t12 = 0.5 * (d1[2] + d2[1]);
        let t23 = 0.5 * (d2[3] + d3[2]);
        let t13 = 0.5 * (d1[3] + d3[1]);
        assert!(t13 <= t12 + t23 + 1e-12);
    }

    #[test]
    fn zero_demand_edges_dropped() {
        let mut rn = collinear_network();
        rn.trips.remove(&(1, 2));
        rn.trips.remove(&(2, 1));
        let zc = lift_to_zones(&rn, 1.0).unwrap();
        assert!(zc.complex.edge_position_by_label(1, 2).is_none());
    }
}
