//! Bowyer-Watson incremental Delaunay triangulation on the unit square.
//!
//! Input sites are expected to be in general position up to floating-point
//! noise; the benchmark generator resamples points that land degenerately, so
//! the triangulation itself only needs ordinary f64 predicates.

use alloc::vec;
use alloc::vec::Vec;

/// A 2D site.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

/// The input contained (near-)collinear or coincident sites that the
/// incremental insertion could not handle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DegenerateConfiguration;

impl core::fmt::Display for DegenerateConfiguration {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "degenerate point configuration")
    }
}

impl core::error::Error for DegenerateConfiguration {}

/// Twice the signed area of the triangle `abc`.
fn orient2d(a: Point, b: Point, c: Point) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

/// Positive when `d` lies strictly inside the circumcircle of the
/// counterclockwise triangle `abc`.
fn incircle(a: Point, b: Point, c: Point, d: Point) -> f64 {
    let adx = a.x - d.x;
    let ady = a.y - d.y;
    let bdx = b.x - d.x;
    let bdy = b.y - d.y;
    let cdx = c.x - d.x;
    let cdy = c.y - d.y;
    let ad2 = adx * adx + ady * ady;
    let bd2 = bdx * bdx + bdy * bdy;
    let cd2 = cdx * cdx + cdy * cdy;
    adx * (bdy * cd2 - bd2 * cdy) - ady * (bdx * cd2 - bd2 * cdx)
        + ad2 * (bdx * cdy - bdy * cdx)
}

/// Delaunay triangulation of `points`; returns triangles as index triples.
///
/// Uses a super-triangle enclosing the unit square; its artifacts are removed
/// at the end. Errors on (near-)degenerate configurations instead of
/// producing a broken mesh.
pub fn triangulate(points: &[Point]) -> Result<Vec<(usize, usize, usize)>, DegenerateConfiguration> {
    let n = points.len();
    if n < 3 {
        return Ok(Vec::new());
    }
    for (i, p) in points.iter().enumerate() {
        for q in &points[i + 1..] {
            if (p.x - q.x).abs() < 1e-12 && (p.y - q.y).abs() < 1e-12 {
                return Err(DegenerateConfiguration);
            }
        }
    }

    // Super-triangle comfortably containing [0,1]^2.
    let all: Vec<Point> = points
        .iter()
        .copied()
        .chain([
            Point { x: -10.0, y: -10.0 },
            Point { x: 30.0, y: -10.0 },
            Point { x: 0.5, y: 30.0 },
        ])
        .collect();
    let (s0, s1, s2) = (n, n + 1, n + 2);

    let mut triangles: Vec<(usize, usize, usize)> = vec![ccw(&all, (s0, s1, s2))];

    for p in 0..n {
        // Cavity: all triangles whose circumcircle contains the new point.
        let mut bad = Vec::new();
        for (t, &tri) in triangles.iter().enumerate() {
            let (a, b, c) = tri;
            if incircle(all[a], all[b], all[c], all[p]) > 0.0 {
                bad.push(t);
            }
        }
        // Boundary of the cavity: edges appearing in exactly one bad triangle.
        let mut boundary: Vec<(usize, usize)> = Vec::new();
        for &t in &bad {
            let (a, b, c) = triangles[t];
            for edge in [(a, b), (b, c), (c, a)] {
                let rev = (edge.1, edge.0);
                if let Some(k) = boundary.iter().position(|&e| e == rev) {
                    boundary.swap_remove(k);
                } else {
                    boundary.push(edge);
                }
            }
        }
        for &t in bad.iter().rev() {
            triangles.swap_remove(t);
        }
        for &(a, b) in &boundary {
            if orient2d(all[a], all[b], all[p]).abs() < 1e-14 {
                return Err(DegenerateConfiguration);
            }
            triangles.push(ccw(&all, (a, b, p)));
        }
        if triangles.is_empty() {
            return Err(DegenerateConfiguration);
        }
    }

    let mut out: Vec<(usize, usize, usize)> = triangles
        .into_iter()
        .filter(|&(a, b, c)| a < n && b < n && c < n)
        .map(|(a, b, c)| {
            let mut t = [a, b, c];
            t.sort_unstable();
            (t[0], t[1], t[2])
        })
        .collect();
    out.sort_unstable();
    if out.is_empty() {
        // All input points collinear: every triangle touched the super-triangle.
        return Err(DegenerateConfiguration);
    }
    Ok(out)
}

/// Edge set of the triangulation.
pub fn triangulation_edges(triangles: &[(usize, usize, usize)]) -> Vec<(usize, usize)> {
    let mut edges: Vec<(usize, usize)> = Vec::with_capacity(3 * triangles.len());
    for &(a, b, c) in triangles {
        edges.push((a, b));
        edges.push((a, c));
        edges.push((b, c));
    }
    edges.sort_unstable();
    edges.dedup();
    edges
}

fn ccw(points: &[Point], (a, b, c): (usize, usize, usize)) -> (usize, usize, usize) {
    if orient2d(points[a], points[b], points[c]) >= 0.0 {
        (a, b, c)
    } else {
        (a, c, b)
    }
}
