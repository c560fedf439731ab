//! Quasi-planar triangulation benchmark instances.
//!
//! Sites are sampled uniformly on the unit square and triangulated; edges are
//! then removed or added at random until the graph has exactly
//! `round(nu * N (N-1) / 2)` edges. Triangles are all 3-cliques and edge
//! weights are i.i.d. uniform. The whole construction is a deterministic
//! function of the seed.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::complex::SimplicialComplex;
use crate::delaunay::{self, Point};
use crate::rng::SplitMix64;
use crate::weights::WeightProfile;

/// Parameters of one benchmark instance family.
#[derive(Debug, Clone)]
pub struct BenchSpec {
    /// Vertex count, at least 4.
    pub n: usize,
    /// Sparsity `nu` in `(0, 1]`: the edge-count target as a fraction of all
    /// vertex pairs.
    pub nu: f64,
    pub seed: u64,
    /// Uniform edge-weight bounds.
    pub weight_low: f64,
    pub weight_high: f64,
}

impl BenchSpec {
    pub fn new(n: usize, nu: f64, seed: u64) -> Self {
        assert!(n >= 4, "need at least 4 vertices");
        assert!(nu > 0.0 && nu <= 1.0, "sparsity must be in (0, 1]");
        Self { n, nu, seed, weight_low: 0.25, weight_high: 0.75 }
    }

    /// Exact edge-count target `round(nu * N (N-1) / 2)`.
    pub fn target_edges(&self) -> usize {
        libm::round(self.nu * (self.n * (self.n - 1)) as f64 / 2.0) as usize
    }
}

/// A generated instance with its provenance counters.
#[derive(Debug, Clone)]
pub struct BenchInstance {
    pub complex: SimplicialComplex,
    pub profile: WeightProfile,
    pub points: Vec<Point>,
    /// Points resampled due to degenerate configurations.
    pub degenerate_resamples: usize,
    pub warnings: Vec<String>,
}

/// Generate one instance deterministically from the spec.
pub fn generate(spec: &BenchSpec) -> BenchInstance {
    assert!(spec.weight_low < spec.weight_high);
    let mut rng = SplitMix64::new(spec.seed);
    let mut degenerate_resamples = 0;
    let mut warnings = Vec::new();

    // Sample sites and triangulate; resample wholesale on degeneracy.
    let (points, triangles) = loop {
        let pts: Vec<Point> = (0..spec.n)
            .map(|_| Point { x: rng.next_f64(), y: rng.next_f64() })
            .collect();
        match delaunay::triangulate(&pts) {
            Ok(t) => break (pts, t),
            Err(_) => degenerate_resamples += 1,
        }
        if degenerate_resamples > 1000 {
            panic!("could not sample a non-degenerate configuration");
        }
    };

    let mut edges = delaunay::triangulation_edges(&triangles);
    let target = spec.target_edges();

    // Trim towards the target, preferring removals that keep the graph
    // connected (up to 100 draws per removal).
    while edges.len() > target {
        let mut removed = false;
        for _ in 0..100 {
            let k = rng.next_below(edges.len() as u64) as usize;
            if !is_bridge(spec.n, &edges, edges[k]) {
                edges.swap_remove(k);
                removed = true;
                break;
            }
        }
        if !removed {
            let k = rng.next_below(edges.len() as u64) as usize;
            edges.swap_remove(k);
            warnings.push(String::from("edge removal disconnected the graph"));
        }
    }
    // Grow towards the target with uniform random non-edges.
    while edges.len() < target {
        let a = rng.next_below(spec.n as u64) as usize;
        let b = rng.next_below(spec.n as u64) as usize;
        if a == b {
            continue;
        }
        let e = (a.min(b), a.max(b));
        if !edges.contains(&e) {
            edges.push(e);
        }
    }
    edges.sort_unstable();

    let vertex_ids: Vec<i64> = (0..spec.n as i64).collect();
    let edge_ids: Vec<(i64, i64)> = edges.iter().map(|&(a, b)| (a as i64, b as i64)).collect();
    let complex = SimplicialComplex::build(&vertex_ids, &edge_ids, None)
        .unwrap_or_else(|e| panic!("generated an invalid complex: {e}"));

    let w1: Vec<f64> =
        (0..complex.n_edges()).map(|_| rng.next_range(spec.weight_low, spec.weight_high)).collect();
    let profile = WeightProfile::from_edge_weights(&complex, w1);

    if complex.component_count_masked(&vec![true; complex.n_edges()]) > 1 {
        warnings.push(format!("instance n={} nu={} is disconnected", spec.n, spec.nu));
    }

    BenchInstance { complex, profile, points, degenerate_resamples, warnings }
}

/// Whether removing `edge` disconnects the graph.
fn is_bridge(n: usize, edges: &[(usize, usize)], edge: (usize, usize)) -> bool {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(a, b) in edges {
        if (a, b) == edge {
            continue;
        }
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut count = 1;
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                count += 1;
                stack.push(w);
            }
        }
    }
    count < n
}
