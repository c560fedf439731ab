//! Scaling benchmark driver: generate triangulation instances, run the flow
//! on each (in parallel), and aggregate a CSV report.

use std::time::Instant;

use holostab_core::bench::{generate, BenchSpec};
use holostab_core::flow::{run_stability, FlowConfig, FlowError};
use holostab_core::rng::SplitMix64;
use holostab_core::solver::Preconditioner;
use rayon::prelude::*;

use crate::fileio::fmt_f64;

/// One benchmark instance outcome.
#[derive(Debug, Clone)]
pub struct BenchRecord {
    pub n: usize,
    pub nu: f64,
    pub repeat: usize,
    pub seed: u64,
    pub m: usize,
    pub runtime_seconds: f64,
    pub eps_star: Option<f64>,
    pub eliminated_edges: usize,
    pub precond: Preconditioner,
    pub converged: bool,
    pub error: Option<String>,
}

/// Cartesian benchmark plan.
#[derive(Debug, Clone)]
pub struct BenchPlan {
    pub n_list: Vec<usize>,
    pub nu_list: Vec<f64>,
    pub repeats: usize,
    pub seed: u64,
    pub flow: FlowConfig,
}

impl BenchPlan {
    /// Instance specs in deterministic order; each instance seed is a pure
    /// function of `(seed, n, nu, repeat)`, so parallel execution cannot
    /// change results.
    pub fn specs(&self) -> Vec<(BenchSpec, usize)> {
        let mut out = Vec::new();
        for &n in &self.n_list {
            for &nu in &self.nu_list {
                for repeat in 0..self.repeats {
                    let mut mix = SplitMix64::new(
                        self.seed ^ ((n as u64) << 32) ^ ((nu * 1e6) as u64) << 8,
                    );
                    for _ in 0..=repeat {
                        mix.next_u64();
                    }
                    let instance_seed = mix.next_u64();
                    out.push((BenchSpec::new(n, nu, instance_seed), repeat));
                }
            }
        }
        out
    }
}

/// Run the full plan; failures are recorded per instance, never fatal.
pub fn run_benchmark(plan: &BenchPlan) -> Vec<BenchRecord> {
    let specs = plan.specs();
    specs
        .par_iter()
        .map(|(spec, repeat)| run_instance(spec, *repeat, plan.flow.clone()))
        .collect()
}

fn run_instance(spec: &BenchSpec, repeat: usize, flow: FlowConfig) -> BenchRecord {
    let instance = generate(spec);
    let precond = flow.solver.precond;
    let start = Instant::now();
    let outcome = run_stability(&instance.complex, &instance.profile, flow);
    let runtime_seconds = start.elapsed().as_secs_f64();

    let mut record = BenchRecord {
        n: spec.n,
        nu: spec.nu,
        repeat,
        seed: spec.seed,
        m: instance.complex.n_edges(),
        runtime_seconds,
        eps_star: None,
        eliminated_edges: 0,
        precond,
        converged: false,
        error: None,
    };
    match outcome {
        Ok(result) => {
            record.eps_star = Some(result.eps_star);
            record.eliminated_edges = result.eliminated_edges.len();
            record.converged = result.converged;
        }
        Err(FlowError::NotConverged(partial)) => {
            record.eps_star = Some(partial.eps_star);
            record.error = Some(String::from("not converged"));
        }
        Err(e) => {
            record.error = Some(e.to_string());
        }
    }
    record
}

/// CSV report; the runtime column is the only non-deterministic one.
pub fn report_csv(records: &[BenchRecord]) -> String {
    let mut out =
        String::from("n,nu,repeat,seed,m,runtime_seconds,eps_star,eliminated_edges,precond,converged,error\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            r.n,
            fmt_f64(r.nu),
            r.repeat,
            r.seed,
            r.m,
            fmt_f64(r.runtime_seconds),
            r.eps_star.map(fmt_f64).unwrap_or_default(),
            r.eliminated_edges,
            match r.precond {
                Preconditioner::Ichol => "ichol",
                Preconditioner::None => "none",
            },
            r.converged,
            r.error.clone().unwrap_or_default(),
        ));
    }
    out
}

/// Least-squares slope of `log(runtime)` against `log(m)`.
pub fn loglog_slope(records: &[BenchRecord]) -> Option<f64> {
    let points: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.converged && r.runtime_seconds > 0.0)
        .map(|r| ((r.m as f64).ln(), r.runtime_seconds.ln()))
        .collect();
    if points.len() < 3 {
        return None;
    }
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-12 {
        return None;
    }
    Some((n * sxy - sx * sy) / denom)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plan_is_deterministic_and_complete() {
        let plan = BenchPlan {
            n_list: vec![8, 10],
            nu_list: vec![0.5],
            repeats: 2,
            seed: 7,
            flow: FlowConfig::default(),
        };
        let a = plan.specs();
        let b = plan.specs();
        assert_eq!(a.len(), 4);
        for ((sa, ra), (sb, rb)) in a.iter().zip(&b) {
            assert_eq!(sa.seed, sb.seed);
            assert_eq!(sa.n, sb.n);
            assert_eq!(ra, rb);
        }
        // Distinct repeats get distinct seeds.
        assert_ne!(a[0].0.seed, a[1].0.seed);
    }

    #[test]
    fn csv_header_and_row_count() {
        let rec = BenchRecord {
            n: 8,
            nu: 0.5,
            repeat: 0,
            seed: 1,
            m: 14,
            runtime_seconds: 0.25,
            eps_star: Some(0.31),
            eliminated_edges: 1,
            precond: Preconditioner::None,
            converged: true,
            error: None,
        };
        let csv = report_csv(&[rec]);
        assert_eq!(csv.lines().count(), 2);
        assert!(csv.starts_with("n,nu,repeat,"));
    }
}
