//! Result, trajectory and manifest emission.
//!
//! All floating-point output carries 17 significant digits with a `.` decimal
//! separator; the result and manifest JSON are written by hand so the float
//! formatting is under our control, and all files are written atomically.

use std::path::Path;

use holostab_core::complex::SimplicialComplex;
use holostab_core::flow::{StabilityResult, TrajectoryRow};

use crate::fileio::{fmt_f64, write_atomic};

fn json_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out
}

/// Result JSON for a stability run.
pub fn result_json(c: &SimplicialComplex, r: &StabilityResult, runtime_seconds: f64) -> String {
    let eliminated: Vec<String> = r
        .eliminated_edges
        .iter()
        .map(|&e| {
            let (a, b) = c.edge_label(e);
            format!("[{a}, {b}]")
        })
        .collect();
    let warnings: Vec<String> =
        r.warnings.iter().map(|w| format!("\"{}\"", json_escape(w))).collect();
    format!(
        concat!(
            "{{\n",
            "  \"converged\": {converged},\n",
            "  \"eps_star\": {eps},\n",
            "  \"f_star\": {f},\n",
            "  \"lambda_plus\": {lambda},\n",
            "  \"mu2\": {mu2},\n",
            "  \"alpha\": {alpha},\n",
            "  \"mu_bar\": {mu_bar},\n",
            "  \"eliminated_edges\": [{elim}],\n",
            "  \"betti_before\": {bb},\n",
            "  \"betti_after\": {ba},\n",
            "  \"outer_iterations\": {outer},\n",
            "  \"runtime_seconds\": {runtime},\n",
            "  \"solver_stats\": {{\n",
            "    \"eig_solves\": {eig},\n",
            "    \"dense_solves\": {dense},\n",
            "    \"lsqr_solves\": {solves},\n",
            "    \"lsqr_iterations\": {iters}\n",
            "  }},\n",
            "  \"warnings\": [{warn}]\n",
            "}}\n"
        ),
        converged = r.converged,
        eps = fmt_f64(r.eps_star),
        f = fmt_f64(r.f_star),
        lambda = fmt_f64(r.lambda_star),
        mu2 = fmt_f64(r.mu2_star),
        alpha = fmt_f64(r.alpha),
        mu_bar = fmt_f64(r.mu_bar),
        elim = eliminated.join(", "),
        bb = r.betti_before,
        ba = r.betti_after,
        outer = r.outer_iterations,
        runtime = fmt_f64(runtime_seconds),
        eig = r.stats.eig_solves,
        dense = r.stats.dense_solves,
        solves = r.stats.lsqr_solves,
        iters = r.stats.lsqr_iterations,
        warn = warnings.join(", "),
    )
}

/// Trajectory CSV: `step,phase,eps,F,lambda_plus,mu2,normE,h,accepted`.
pub fn trajectory_csv(rows: &[TrajectoryRow]) -> String {
    let mut out = String::from("step,phase,eps,F,lambda_plus,mu2,normE,h,accepted\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.step,
            r.phase.as_str(),
            fmt_f64(r.eps),
            fmt_f64(r.f),
            fmt_f64(r.lambda_plus),
            fmt_f64(r.mu2),
            fmt_f64(r.norm_e),
            fmt_f64(r.h),
            r.accepted
        ));
    }
    out
}

/// Fully resolved run manifest: every knob that went into a run, so results
/// can be replayed.
#[derive(Debug, Clone)]
pub struct Manifest {
    pub command: String,
    pub inputs: Vec<String>,
    pub seed: Option<u64>,
    /// `(key, value)` pairs of the resolved configuration; values are
    /// pre-rendered JSON scalars.
    pub config: Vec<(String, String)>,
    pub unix_time_seconds: f64,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        let unix_time_seconds = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs_f64())
            .unwrap_or(0.0);
        Self {
            command: command.to_string(),
            inputs: Vec::new(),
            seed: None,
            config: Vec::new(),
            unix_time_seconds,
        }
    }

    pub fn input(mut self, path: &Path) -> Self {
        self.inputs.push(path.display().to_string());
        self
    }

    pub fn kv(&mut self, key: &str, value: impl Into<ManifestValue>) {
        self.config.push((key.to_string(), value.into().0));
    }

    pub fn to_json(&self) -> String {
        let inputs: Vec<String> =
            self.inputs.iter().map(|i| format!("\"{}\"", json_escape(i))).collect();
        let config: Vec<String> =
            self.config.iter().map(|(k, v)| format!("    \"{}\": {v}", json_escape(k))).collect();
        format!(
            concat!(
                "{{\n",
                "  \"command\": \"{cmd}\",\n",
                "  \"version\": \"{version}\",\n",
                "  \"inputs\": [{inputs}],\n",
                "  \"seed\": {seed},\n",
                "  \"unix_time_seconds\": {time},\n",
                "  \"config\": {{\n{config}\n  }}\n",
                "}}\n"
            ),
            cmd = json_escape(&self.command),
            version = env!("CARGO_PKG_VERSION"),
            inputs = inputs.join(", "),
            seed = self.seed.map(|s| s.to_string()).unwrap_or_else(|| "null".into()),
            time = fmt_f64(self.unix_time_seconds),
            config = config.join(",\n"),
        )
    }
}

/// Pre-rendered JSON scalar for manifest values.
pub struct ManifestValue(String);

impl From<f64> for ManifestValue {
    fn from(x: f64) -> Self {
        ManifestValue(fmt_f64(x))
    }
}

impl From<usize> for ManifestValue {
    fn from(x: usize) -> Self {
        ManifestValue(x.to_string())
    }
}

impl From<u64> for ManifestValue {
    fn from(x: u64) -> Self {
        ManifestValue(x.to_string())
    }
}

impl From<bool> for ManifestValue {
    fn from(x: bool) -> Self {
        ManifestValue(x.to_string())
    }
}

impl From<&str> for ManifestValue {
    fn from(x: &str) -> Self {
        ManifestValue(format!("\"{}\"", json_escape(x)))
    }
}

/// Write result + trajectory + manifest next to each other, atomically.
pub fn write_run_outputs(
    c: &SimplicialComplex,
    r: &StabilityResult,
    runtime_seconds: f64,
    manifest: &Manifest,
    out: &Path,
    trajectory: Option<&Path>,
) -> std::io::Result<()> {
    write_atomic(out, &result_json(c, r, runtime_seconds))?;
    if let Some(tpath) = trajectory {
        write_atomic(tpath, &trajectory_csv(&r.trajectory))?;
    }
    let manifest_path = out.with_extension("manifest.json");
    write_atomic(&manifest_path, &manifest.to_json())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn escape_handles_quotes_and_newlines() {
        assert_eq!(json_escape("a\"b\n"), "a\\\"b\\n");
    }

    #[test]
    fn manifest_is_valid_json() {
        let mut m = Manifest::new("stability");
        m.kv("eps0", 1e-3);
        m.kv("max_outer", 100usize);
        m.kv("mode", "auto");
        let parsed: serde_json::Value = serde_json::from_str(&m.to_json()).unwrap();
        assert_eq!(parsed["command"], "stability");
        assert_eq!(parsed["config"]["mode"], "auto");
    }
}
