//! Order-2 simplicial complexes with signed boundary operators.
//!
//! Complexes are validated on construction (downward closure, no duplicates,
//! no self-loops) and stored in canonical lexicographic order. External vertex
//! ids are arbitrary integers; internally they are normalized to contiguous
//! 0-based indices, with the label table kept for reporting.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::rank;
use crate::sparse::CsrMatrix;

/// Construction errors for [`SimplicialComplex`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ComplexError {
    /// A simplex repeats a vertex, e.g. an edge `(i, i)`.
    SelfLoop { simplex: Vec<i64> },
    /// The same simplex appears twice.
    DuplicateSimplex { simplex: Vec<i64> },
    /// Downward closure violated: a face of a listed simplex is absent.
    /// Also raised when an edge or triangle references an unknown vertex.
    MissingFace { simplex: Vec<i64>, face: Vec<i64> },
}

impl core::fmt::Display for ComplexError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ComplexError::SelfLoop { simplex } => write!(f, "self-loop in simplex {simplex:?}"),
            ComplexError::DuplicateSimplex { simplex } => {
                write!(f, "duplicate simplex {simplex:?}")
            }
            ComplexError::MissingFace { simplex, face } => {
                write!(f, "simplex {simplex:?} misses face {face:?}")
            }
        }
    }
}

impl core::error::Error for ComplexError {}

/// A validated 2-dimensional simplicial complex in canonical order.
#[derive(Debug, Clone)]
pub struct SimplicialComplex {
    /// External vertex ids, ascending; internal vertex `v` has label `labels[v]`.
    labels: Vec<i64>,
    /// Edges `(i, j)` with `i < j`, lexicographically sorted.
    edges: Vec<(u32, u32)>,
    /// Triangles `(i, j, k)` with `i < j < k`, lexicographically sorted.
    triangles: Vec<(u32, u32, u32)>,
    edge_index: BTreeMap<(u32, u32), usize>,
    triangle_index: BTreeMap<(u32, u32, u32), usize>,
    /// Edge positions of the three faces of each triangle, ordered
    /// `[(j,k), (i,k), (i,j)]` to match the alternating sign convention.
    triangle_edges: Vec<[usize; 3]>,
    /// Sorted adjacency lists of the underlying graph.
    adjacency: Vec<Vec<u32>>,
}

/// Signed sparse boundary operator `B_k` in column-major triplet form.
#[derive(Debug, Clone)]
pub struct BoundaryMatrix {
    pub order: u8,
    pub nrows: usize,
    pub ncols: usize,
    /// `(row, col, sign)` sorted by column; each column holds one simplex.
    entries: Vec<(usize, usize, i8)>,
}

impl BoundaryMatrix {
    pub fn entries(&self) -> &[(usize, usize, i8)] {
        &self.entries
    }

    pub fn to_csr(&self) -> CsrMatrix {
        let triplets: Vec<_> = self.entries.iter().map(|&(r, c, s)| (r, c, s as f64)).collect();
        CsrMatrix::from_triplets(self.nrows, self.ncols, &triplets)
    }

    fn int_entries(&self) -> Vec<(usize, usize, i64)> {
        self.entries.iter().map(|&(r, c, s)| (r, c, s as i64)).collect()
    }

    /// Exact integer product check `B_k B_{k+1} = 0`.
    pub fn product_is_zero(&self, next: &BoundaryMatrix) -> bool {
        assert_eq!(self.ncols, next.nrows);
        // Column-wise accumulation of B1 * B2 in integer arithmetic.
        let mut rows_of: Vec<Vec<(usize, i64)>> = vec![Vec::new(); self.ncols];
        for &(r, c, s) in &self.entries {
            rows_of[c].push((r, s as i64));
        }
        let mut acc: BTreeMap<usize, i64> = BTreeMap::new();
        let mut col = usize::MAX;
        for &(r, c, s) in next.entries.iter().chain(core::iter::once(&(usize::MAX, usize::MAX, 0i8))) {
            if c != col {
                if acc.values().any(|&v| v != 0) {
                    return false;
                }
                acc.clear();
                col = c;
            }
            if c == usize::MAX {
                break;
            }
            for &(rr, vv) in &rows_of[r] {
                *acc.entry(rr).or_insert(0) += vv * s as i64;
            }
        }
        true
    }
}

impl SimplicialComplex {
    /// Build and validate a complex.
    ///
    /// When `triangles` is `None`, all 3-cliques of the edge set are enrolled
    /// as 2-simplices. Explicit triangle lists are checked for downward
    /// closure.
    pub fn build(
        vertices: &[i64],
        edges: &[(i64, i64)],
        triangles: Option<&[(i64, i64, i64)]>,
    ) -> Result<Self, ComplexError> {
        let mut labels: Vec<i64> = vertices.to_vec();
        labels.sort_unstable();
        if let Some(w) = labels.windows(2).find(|w| w[0] == w[1]) {
            return Err(ComplexError::DuplicateSimplex { simplex: vec![w[0]] });
        }
        let index_of: BTreeMap<i64, u32> =
            labels.iter().enumerate().map(|(i, &l)| (l, i as u32)).collect();
        let lookup = |id: i64, simplex: &dyn Fn() -> Vec<i64>| -> Result<u32, ComplexError> {
            index_of.get(&id).copied().ok_or_else(|| ComplexError::MissingFace {
                simplex: simplex(),
                face: vec![id],
            })
        };

        let mut internal_edges = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a == b {
                return Err(ComplexError::SelfLoop { simplex: vec![a, b] });
            }
            let ctx = move || vec![a, b];
            let ia = lookup(a, &ctx)?;
            let ib = lookup(b, &ctx)?;
            internal_edges.push((ia.min(ib), ia.max(ib)));
        }
        internal_edges.sort_unstable();
        if let Some(w) = internal_edges.windows(2).find(|w| w[0] == w[1]) {
            let (i, j) = w[0];
            return Err(ComplexError::DuplicateSimplex {
                simplex: vec![labels[i as usize], labels[j as usize]],
            });
        }
        let edge_index: BTreeMap<(u32, u32), usize> =
            internal_edges.iter().enumerate().map(|(k, &e)| (e, k)).collect();

        let mut adjacency: Vec<Vec<u32>> = vec![Vec::new(); labels.len()];
        for &(i, j) in &internal_edges {
            adjacency[i as usize].push(j);
            adjacency[j as usize].push(i);
        }
        for list in adjacency.iter_mut() {
            list.sort_unstable();
        }

        let internal_triangles = match triangles {
            Some(list) => {
                let mut out = Vec::with_capacity(list.len());
                for &(a, b, c) in list {
                    if a == b || b == c || a == c {
                        return Err(ComplexError::SelfLoop { simplex: vec![a, b, c] });
                    }
                    let ctx = move || vec![a, b, c];
                    let mut t = [lookup(a, &ctx)?, lookup(b, &ctx)?, lookup(c, &ctx)?];
                    t.sort_unstable();
                    for (u, v) in [(t[0], t[1]), (t[0], t[2]), (t[1], t[2])] {
                        if !edge_index.contains_key(&(u, v)) {
                            return Err(ComplexError::MissingFace {
                                simplex: vec![a, b, c],
                                face: vec![labels[u as usize], labels[v as usize]],
                            });
                        }
                    }
                    out.push((t[0], t[1], t[2]));
                }
                out.sort_unstable();
                if let Some(w) = out.windows(2).find(|w| w[0] == w[1]) {
                    let (i, j, k) = w[0];
                    return Err(ComplexError::DuplicateSimplex {
                        simplex: vec![labels[i as usize], labels[j as usize], labels[k as usize]],
                    });
                }
                out
            }
            None => enumerate_three_cliques(&adjacency, &internal_edges),
        };

        let triangle_index: BTreeMap<(u32, u32, u32), usize> =
            internal_triangles.iter().enumerate().map(|(k, &t)| (t, k)).collect();
        let triangle_edges = internal_triangles
            .iter()
            .map(|&(i, j, k)| {
                [
                    edge_index[&(j, k)],
                    edge_index[&(i, k)],
                    edge_index[&(i, j)],
                ]
            })
            .collect();

        Ok(Self {
            labels,
            edges: internal_edges,
            triangles: internal_triangles,
            edge_index,
            triangle_index,
            triangle_edges,
            adjacency,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.labels.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn total_simplices(&self) -> usize {
        self.n_vertices() + self.n_edges() + self.n_triangles()
    }

    pub fn vertex_labels(&self) -> &[i64] {
        &self.labels
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn triangles(&self) -> &[(u32, u32, u32)] {
        &self.triangles
    }

    /// External-id form of edge `e`.
    pub fn edge_label(&self, e: usize) -> (i64, i64) {
        let (i, j) = self.edges[e];
        (self.labels[i as usize], self.labels[j as usize])
    }

    pub fn triangle_label(&self, t: usize) -> (i64, i64, i64) {
        let (i, j, k) = self.triangles[t];
        (self.labels[i as usize], self.labels[j as usize], self.labels[k as usize])
    }

    /// Position of the internal edge `(i, j)` in canonical order.
    pub fn edge_position(&self, i: u32, j: u32) -> Option<usize> {
        let key = (i.min(j), i.max(j));
        self.edge_index.get(&key).copied()
    }

    /// Position of an edge given by external vertex ids.
    pub fn edge_position_by_label(&self, a: i64, b: i64) -> Option<usize> {
        let ia = self.labels.binary_search(&a).ok()? as u32;
        let ib = self.labels.binary_search(&b).ok()? as u32;
        self.edge_position(ia, ib)
    }

    pub fn triangle_position(&self, i: u32, j: u32, k: u32) -> Option<usize> {
        let mut t = [i, j, k];
        t.sort_unstable();
        self.triangle_index.get(&(t[0], t[1], t[2])).copied()
    }

    /// Edge positions of the triangle's faces, ordered `[(j,k), (i,k), (i,j)]`.
    pub fn triangle_edge_positions(&self, t: usize) -> [usize; 3] {
        self.triangle_edges[t]
    }

    pub fn adjacency(&self) -> &[Vec<u32>] {
        &self.adjacency
    }

    /// Unweighted vertex degree.
    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    /// Signed boundary operator of order 1 or 2 under the lexicographic
    /// orientation: edge `(i, j)` maps to `[j] - [i]`; triangle `(i, j, k)`
    /// maps to `[j,k] - [i,k] + [i,j]`.
    pub fn boundary_matrix(&self, order: u8) -> BoundaryMatrix {
        match order {
            1 => {
                let mut entries = Vec::with_capacity(2 * self.edges.len());
                for (e, &(i, j)) in self.edges.iter().enumerate() {
                    entries.push((i as usize, e, -1i8));
                    entries.push((j as usize, e, 1i8));
                }
                entries.sort_unstable_by_key(|&(r, c, _)| (c, r));
                BoundaryMatrix { order: 1, nrows: self.n_vertices(), ncols: self.n_edges(), entries }
            }
            2 => {
                let mut entries = Vec::with_capacity(3 * self.triangles.len());
                for (t, faces) in self.triangle_edges.iter().enumerate() {
                    entries.push((faces[0], t, 1i8));
                    entries.push((faces[1], t, -1i8));
                    entries.push((faces[2], t, 1i8));
                }
                entries.sort_unstable_by_key(|&(r, c, _)| (c, r));
                BoundaryMatrix { order: 2, nrows: self.n_edges(), ncols: self.n_triangles(), entries }
            }
            _ => panic!("only orders 1 and 2 are supported"),
        }
    }

    /// Exact ranks of `B_1` and `B_2`.
    pub fn boundary_ranks(&self) -> (usize, usize) {
        let b1 = self.boundary_matrix(1);
        let b2 = self.boundary_matrix(2);
        let total = self.total_simplices();
        let r1 = rank::rank_auto(&b1.int_entries(), b1.nrows, b1.ncols, total);
        let r2 = rank::rank_auto(&b2.int_entries(), b2.nrows, b2.ncols, total);
        (r1, r2)
    }

    /// `(beta_0, beta_1)` from the boundary ranks:
    /// `beta_0 = n - rank B_1`, `beta_1 = m - rank B_1 - rank B_2`.
    pub fn betti_numbers(&self) -> (usize, usize) {
        let (r1, r2) = self.boundary_ranks();
        (self.n_vertices() - r1, self.n_edges() - r1 - r2)
    }

    /// Number of connected components of the subgraph with the given edges
    /// enabled. Used by the flow to track the effective kernel of the graph
    /// Laplacian when weights hit zero.
    pub fn component_count_masked(&self, edge_enabled: &[bool]) -> usize {
        self.component_labels_masked(edge_enabled).1
    }

    /// Component label per vertex plus the component count.
    pub fn component_labels_masked(&self, edge_enabled: &[bool]) -> (Vec<usize>, usize) {
        debug_assert_eq!(edge_enabled.len(), self.n_edges());
        let n = self.n_vertices();
        let mut label = vec![usize::MAX; n];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..n {
            if label[start] != usize::MAX {
                continue;
            }
            label[start] = count;
            stack.push(start as u32);
            while let Some(v) = stack.pop() {
                for &w in &self.adjacency[v as usize] {
                    let e = self.edge_position(v, w).unwrap();
                    if edge_enabled[e] && label[w as usize] == usize::MAX {
                        label[w as usize] = count;
                        stack.push(w);
                    }
                }
            }
            count += 1;
        }
        (label, count)
    }

    /// The complex obtained by dropping the given edges (and every triangle
    /// that uses them). Vertices are kept.
    pub fn remove_edges(&self, removed: &[usize]) -> SimplicialComplex {
        let mut keep = vec![true; self.n_edges()];
        for &e in removed {
            keep[e] = false;
        }
        let edges: Vec<(i64, i64)> = self
            .edges
            .iter()
            .enumerate()
            .filter(|&(e, _)| keep[e])
            .map(|(_, &(i, j))| (self.labels[i as usize], self.labels[j as usize]))
            .collect();
        let triangles: Vec<(i64, i64, i64)> = self
            .triangles
            .iter()
            .zip(&self.triangle_edges)
            .filter(|&(_, faces)| faces.iter().all(|&e| keep[e]))
            .map(|(&(i, j, k), _)| {
                (self.labels[i as usize], self.labels[j as usize], self.labels[k as usize])
            })
            .collect();
        SimplicialComplex::build(&self.labels, &edges, Some(&triangles))
            .expect("subcomplex of a valid complex is valid")
    }
}

/// All 3-cliques of the graph by sorted-adjacency intersection.
fn enumerate_three_cliques(adjacency: &[Vec<u32>], edges: &[(u32, u32)]) -> Vec<(u32, u32, u32)> {
    let mut out = Vec::new();
    for &(i, j) in edges {
        // Common neighbors k with k > j close the triangle exactly once.
        let a = &adjacency[i as usize];
        let b = &adjacency[j as usize];
        let (mut p, mut q) = (0, 0);
        while p < a.len() && q < b.len() {
            match a[p].cmp(&b[q]) {
                core::cmp::Ordering::Less => p += 1,
                core::cmp::Ordering::Greater => q += 1,
                core::cmp::Ordering::Equal => {
                    if a[p] > j {
                        out.push((i, j, a[p]));
                    }
                    p += 1;
                    q += 1;
                }
            }
        }
    }
    out.sort_unstable();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig1() -> SimplicialComplex {
        // 7 vertices, 10 edges, triangles 123, 456, 467.
        let vertices: Vec<i64> = (1..=7).collect();
        let edges = [(1, 2), (1, 3), (2, 3), (2, 4), (3, 5), (4, 5), (4, 6), (4, 7), (5, 6), (6, 7)];
        let triangles = [(1, 2, 3), (4, 5, 6), (4, 6, 7)];
        SimplicialComplex::build(&vertices, &edges, Some(&triangles)).unwrap()
    }

    #[test]
    fn counts_and_order() {
        let c = fig1();
        assert_eq!(c.n_vertices(), 7);
        assert_eq!(c.n_edges(), 10);
        assert_eq!(c.n_triangles(), 3);
        assert!(c.edges().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn single_edge_has_empty_b2() {
        let c = SimplicialComplex::build(&[1, 2], &[(1, 2)], None).unwrap();
        let b2 = c.boundary_matrix(2);
        assert_eq!(b2.ncols, 0);
        assert_eq!(b2.entries().len(), 0);
    }

    #[test]
    fn clique_autofill_finds_single_triangle() {
        let c = SimplicialComplex::build(&[1, 2, 3], &[(1, 2), (1, 3), (2, 3)], None).unwrap();
        assert_eq!(c.n_triangles(), 1);
        assert_eq!(c.triangle_label(0), (1, 2, 3));
        assert_eq!(c.betti_numbers(), (1, 0));
    }

    #[test]
    fn closure_violation_rejected() {
        let err = SimplicialComplex::build(&[1, 2, 3], &[(1, 2), (1, 3)], Some(&[(1, 2, 3)]));
        assert!(matches!(err, Err(ComplexError::MissingFace { .. })));
    }

    #[test]
    fn self_loop_rejected() {
        let err = SimplicialComplex::build(&[1, 2], &[(1, 1)], None);
        assert!(matches!(err, Err(ComplexError::SelfLoop { .. })));
    }

    #[test]
    fn duplicate_edge_rejected() {
        let err = SimplicialComplex::build(&[1, 2], &[(1, 2), (2, 1)], None);
        assert!(matches!(err, Err(ComplexError::DuplicateSimplex { .. })));
    }

    #[test]
    fn unknown_vertex_is_missing_face() {
        let err = SimplicialComplex::build(&[1, 2], &[(1, 5)], None);
        assert!(matches!(err, Err(ComplexError::MissingFace { .. })));
    }

    #[test]
    fn labels_are_preserved() {
        let c = SimplicialComplex::build(&[10, 30, 20], &[(10, 30), (20, 30)], None).unwrap();
        assert_eq!(c.vertex_labels(), &[10, 20, 30]);
        assert_eq!(c.edge_label(0), (10, 30));
        assert_eq!(c.edge_label(1), (20, 30));
    }

    #[test]
    fn fig1_betti() {
        // One hole: 2-4-5-3.
        assert_eq!(fig1().betti_numbers(), (1, 1));
    }

    #[test]
    fn masked_components() {
        let c = fig1();
        let mut mask = vec![true; c.n_edges()];
        assert_eq!(c.component_count_masked(&mask), 1);
        // Cut 2-4 and 3-5: the complex splits in two.
        mask[c.edge_position_by_label(2, 4).unwrap()] = false;
        mask[c.edge_position_by_label(3, 5).unwrap()] = false;
        assert_eq!(c.component_count_masked(&mask), 2);
    }

    #[test]
    fn remove_edges_drops_incident_triangles() {
        let c = fig1();
        let e = c.edge_position_by_label(4, 6).unwrap();
        let r = c.remove_edges(&[e]);
        assert_eq!(r.n_edges(), 9);
        assert_eq!(r.n_triangles(), 1);
    }
}
