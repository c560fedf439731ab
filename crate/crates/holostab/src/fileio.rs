//! The complex JSON format, MatrixMarket export, and atomic file writes.
//!
//! A complex file is a JSON object
//!
//! ```json
//! {
//!   "vertices": [1, 2, 3],
//!   "edges": [[1, 2], [1, 3], [2, 3]],
//!   "triangles": [[1, 2, 3]],
//!   "edge_weights": [1.0, 0.5, 2.0]
//! }
//! ```
//!
//! `triangles` is optional (all 3-cliques are enrolled when absent) and
//! `edge_weights` is aligned with the file's `edges` array; the loader
//! re-aligns weights when it canonicalizes the edge order.

use std::fs;
use std::io::Write;
use std::path::Path;

use holostab_core::complex::{ComplexError, SimplicialComplex};
use holostab_core::sparse::CsrMatrix;
use holostab_core::weights::WeightProfile;
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FileError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid complex: {0}")]
    Complex(#[from] ComplexError),
    #[error("edge_weights has {got} entries, expected {expected}")]
    WeightCount { got: usize, expected: usize },
    #[error("edge weights must be positive (edge index {index})")]
    NonPositiveWeight { index: usize },
}

#[derive(Debug, Deserialize)]
struct ComplexFile {
    vertices: Vec<i64>,
    edges: Vec<(i64, i64)>,
    #[serde(default)]
    triangles: Option<Vec<(i64, i64, i64)>>,
    #[serde(default)]
    edge_weights: Option<Vec<f64>>,
}

/// Load and validate a complex file; returns the complex and its weight
/// profile (unit weights when the file has none).
pub fn load_complex(path: &Path) -> Result<(SimplicialComplex, WeightProfile), FileError> {
    let text = fs::read_to_string(path)?;
    parse_complex(&text)
}

pub fn parse_complex(text: &str) -> Result<(SimplicialComplex, WeightProfile), FileError> {
    let file: ComplexFile = serde_json::from_str(text)?;
    let complex =
        SimplicialComplex::build(&file.vertices, &file.edges, file.triangles.as_deref())?;

    let profile = match file.edge_weights {
        None => WeightProfile::unit(&complex),
        Some(weights) => {
            if weights.len() != file.edges.len() {
                return Err(FileError::WeightCount {
                    got: weights.len(),
                    expected: file.edges.len(),
                });
            }
            // Re-align with the canonical edge order.
            let mut w1 = vec![0.0; complex.n_edges()];
            for (&(a, b), &w) in file.edges.iter().zip(&weights) {
                let pos = complex
                    .edge_position_by_label(a, b)
                    .expect("edge made it into the complex");
                w1[pos] = w;
            }
            if let Some(index) = w1.iter().position(|&w| !(w > 0.0)) {
                return Err(FileError::NonPositiveWeight { index });
            }
            WeightProfile::from_edge_weights(&complex, w1)
        }
    };
    Ok((complex, profile))
}

/// Serialize a complex (canonical order) with its edge weights.
pub fn complex_to_json(c: &SimplicialComplex, profile: Option<&WeightProfile>) -> String {
    let mut out = String::from("{\n  \"vertices\": [");
    out.push_str(
        &c.vertex_labels().iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", "),
    );
    out.push_str("],\n  \"edges\": [");
    out.push_str(
        &(0..c.n_edges())
            .map(|e| {
                let (a, b) = c.edge_label(e);
                format!("[{a}, {b}]")
            })
            .collect::<Vec<_>>()
            .join(", "),
    );
    out.push_str("],\n  \"triangles\": [");
    out.push_str(
        &(0..c.n_triangles())
            .map(|t| {
                let (a, b, cc) = c.triangle_label(t);
                format!("[{a}, {b}, {cc}]")
            })
            .collect::<Vec<_>>()
            .join(", "),
    );
    out.push(']');
    if let Some(p) = profile {
        out.push_str(",\n  \"edge_weights\": [");
        out.push_str(&p.w1.iter().map(|&w| fmt_f64(w)).collect::<Vec<_>>().join(", "));
        out.push(']');
    }
    out.push_str("\n}\n");
    out
}

/// Write `content` to `path` atomically (temp file + rename).
pub fn write_atomic(path: &Path, content: &str) -> Result<(), std::io::Error> {
    let tmp = path.with_extension("tmp_write");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(content.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

/// 17 significant digits, locale-independent.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        String::from("NaN")
    } else if x > 0.0 {
        String::from("Infinity")
    } else {
        String::from("-Infinity")
    }
}

/// MatrixMarket coordinate export of a sparse matrix (1-based indices).
pub fn matrix_market(a: &CsrMatrix) -> String {
    let mut out = String::from("%%MatrixMarket matrix coordinate real general\n");
    out.push_str(&format!("{} {} {}\n", a.nrows(), a.ncols(), a.nnz()));
    for (r, c, v) in a.iter() {
        out.push_str(&format!("{} {} {}\n", r + 1, c + 1, fmt_f64(v)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_preserves_weights_across_reordering() {
        // Edges listed out of canonical order: weights must follow.
        let text = r#"{
            "vertices": [3, 1, 2],
            "edges": [[2, 3], [1, 2], [1, 3]],
            "edge_weights": [30.0, 10.0, 20.0]
        }"#;
        let (c, p) = parse_complex(text).unwrap();
        assert_eq!(p.w1[c.edge_position_by_label(1, 2).unwrap()], 10.0);
        assert_eq!(p.w1[c.edge_position_by_label(1, 3).unwrap()], 20.0);
        assert_eq!(p.w1[c.edge_position_by_label(2, 3).unwrap()], 30.0);
        // Triangles auto-filled from the clique.
        assert_eq!(c.n_triangles(), 1);

        let json = complex_to_json(&c, Some(&p));
        let (c2, p2) = parse_complex(&json).unwrap();
        assert_eq!(c2.edges(), c.edges());
        assert_eq!(p2.w1, p.w1);
    }

    #[test]
    fn malformed_json_is_an_error() {
        assert!(parse_complex("{ not json").is_err());
    }

    #[test]
    fn weight_count_mismatch() {
        let text = r#"{"vertices":[1,2],"edges":[[1,2]],"edge_weights":[1.0,2.0]}"#;
        assert!(matches!(parse_complex(text), Err(FileError::WeightCount { .. })));
    }

    #[test]
    fn closure_violation_surfaces() {
        let text = r#"{"vertices":[1,2,3],"edges":[[1,2],[1,3]],"triangles":[[1,2,3]]}"#;
        assert!(matches!(parse_complex(text), Err(FileError::Complex(_))));
    }

    #[test]
    fn float_format_has_17_digits() {
        assert_eq!(fmt_f64(0.4), "4.0000000000000002e-1");
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn matrix_market_shape_line() {
        let a = CsrMatrix::from_triplets(2, 3, &[(0, 1, 0.5), (1, 2, -1.0)]);
        let mm = matrix_market(&a);
        let mut lines = mm.lines();
        assert!(lines.next().unwrap().starts_with("%%MatrixMarket"));
        assert_eq!(lines.next().unwrap(), "2 3 2");
    }
}
