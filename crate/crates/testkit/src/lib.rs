//! Brute-force oracles and fixture generators shared by the test suites.
//!
//! Everything here is deliberately independent of the library's computational
//! paths: components come from union-find, the Cheeger constant from explicit
//! bipartition enumeration, Betti checks from freshly built complexes. Slow
//! and obviously correct.

use holostab_core::complex::SimplicialComplex;
use holostab_core::rng::SplitMix64;
use holostab_core::weights::WeightProfile;

/// Union-find count of connected components over `n` vertices.
pub fn union_find_components(n: usize, edges: &[(usize, usize)]) -> usize {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut count = n;
    for &(a, b) in edges {
        let ra = find(&mut parent, a);
        let rb = find(&mut parent, b);
        if ra != rb {
            parent[ra] = rb;
            count -= 1;
        }
    }
    count
}

/// Brute-force Cheeger constant over all vertex bipartitions:
/// `h = min_S w1(S, S^c) / min(w0(S), w0(S^c))`. Exponential; `n <= 20`.
pub fn cheeger_constant(
    n: usize,
    edges: &[(usize, usize)],
    w1: &[f64],
    w0: &[f64],
) -> f64 {
    assert!(n >= 2 && n <= 20);
    let mut best = f64::INFINITY;
    // Fix vertex 0 on one side to halve the enumeration.
    for mask in 0u32..(1 << (n - 1)) {
        let side = |v: usize| -> bool { v != 0 && (mask >> (v - 1)) & 1 == 1 };
        let mut cut = 0.0;
        for (e, &(a, b)) in edges.iter().enumerate() {
            if side(a) != side(b) {
                cut += w1[e];
            }
        }
        let (mut w_in, mut w_out) = (0.0, 0.0);
        for v in 0..n {
            if side(v) {
                w_out += w0[v];
            } else {
                w_in += w0[v];
            }
        }
        if w_out == 0.0 {
            continue; // not a bipartition
        }
        let ratio = cut / w_in.min(w_out);
        if ratio < best {
            best = ratio;
        }
    }
    best
}

/// A random valid complex: a connected random graph on `n` vertices with all
/// 3-cliques filled in.
pub fn random_complex(rng: &mut SplitMix64, n: usize, extra_edge_prob: f64) -> SimplicialComplex {
    // Random spanning tree first, then extra edges.
    let mut edges: Vec<(i64, i64)> = Vec::new();
    for v in 1..n {
        let u = rng.next_below(v as u64) as i64;
        edges.push((u, v as i64));
    }
    for a in 0..n {
        for b in (a + 1)..n {
            if edges.iter().any(|&(x, y)| (x, y) == (a as i64, b as i64)) {
                continue;
            }
            if rng.next_f64() < extra_edge_prob {
                edges.push((a as i64, b as i64));
            }
        }
    }
    let vertices: Vec<i64> = (0..n as i64).collect();
    SimplicialComplex::build(&vertices, &edges, None).expect("random complex is valid")
}

/// Random positive weight profile with weights in `[lo, hi)`.
pub fn random_profile(
    rng: &mut SplitMix64,
    c: &SimplicialComplex,
    lo: f64,
    hi: f64,
) -> WeightProfile {
    let w1: Vec<f64> = (0..c.n_edges()).map(|_| rng.next_range(lo, hi)).collect();
    let mut p = WeightProfile::from_edge_weights(c, w1);
    p.w2 = (0..c.n_triangles()).map(|_| rng.next_range(lo, hi)).collect();
    p
}

/// The illustrative 8-vertex fixture: twelve edges, four triangles, one hole
/// `[2,3,4,5]`; the cheapest new hole comes from eliminating edge `(5,6)`.
pub fn illustrative_fixture() -> (SimplicialComplex, WeightProfile) {
    let vertices: Vec<i64> = (1..=8).collect();
    let edges = [
        (1, 2),
        (1, 3),
        (1, 8),
        (2, 3),
        (2, 5),
        (2, 8),
        (3, 4),
        (4, 5),
        (4, 6),
        (5, 6),
        (5, 7),
        (6, 7),
    ];
    let triangles = [(1, 2, 3), (1, 2, 8), (4, 5, 6), (5, 6, 7)];
    let c = SimplicialComplex::build(&vertices, &edges.to_vec(), Some(&triangles)).unwrap();
    let mut w1 = vec![0.5; c.n_edges()];
    w1[c.edge_position_by_label(1, 2).unwrap()] = 0.7;
    w1[c.edge_position_by_label(5, 6).unwrap()] = 0.4;
    let profile = WeightProfile::from_edge_weights(&c, w1);
    (c, profile)
}

/// The homological-pollution example: 7 vertices, 10 edges, 3 triangles, one
/// hole `[2,4,5,3]`; edges `(2,4)` and `(3,5)` carry a small weight
/// `eps_hat` and connect the two triangle clusters.
pub fn pollution_fixture(eps_hat: f64) -> (SimplicialComplex, WeightProfile) {
    let vertices: Vec<i64> = (1..=7).collect();
    let edges = [
        (1, 2),
        (1, 3),
        (2, 3),
        (2, 4),
        (3, 5),
        (4, 5),
        (4, 6),
        (5, 6),
        (5, 7),
        (6, 7),
    ];
    let triangles = [(1, 2, 3), (4, 5, 6), (5, 6, 7)];
    let c = SimplicialComplex::build(&vertices, &edges.to_vec(), Some(&triangles)).unwrap();
    let mut w1 = vec![1.0; c.n_edges()];
    w1[c.edge_position_by_label(2, 4).unwrap()] = eps_hat;
    w1[c.edge_position_by_label(3, 5).unwrap()] = eps_hat;
    let profile = WeightProfile::from_edge_weights(&c, w1);
    (c, profile)
}

/// The Fig. 1 complex: 7 vertices, 10 edges, triangles 123, 456, 467.
pub fn fig1_complex() -> SimplicialComplex {
    let vertices: Vec<i64> = (1..=7).collect();
    let edges = [
        (1, 2),
        (1, 3),
        (2, 3),
        (2, 4),
        (3, 5),
        (4, 5),
        (4, 6),
        (4, 7),
        (5, 6),
        (6, 7),
    ];
    let triangles = [(1, 2, 3), (4, 5, 6), (4, 6, 7)];
    SimplicialComplex::build(&vertices, &edges.to_vec(), Some(&triangles)).unwrap()
}
