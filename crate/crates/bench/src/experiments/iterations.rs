use std::time::Instant;

use entropic_ot::histogram::sample_simplex;
use entropic_ot::{sinkhorn_divergence, SinkhornConfig};

use super::{check_lambdas, elapsed_ms, seed_stream, synthetic_metric};
use crate::error::{BenchError, Result};
use crate::records::ExperimentRecord;

#[derive(Debug, Clone)]
pub struct IterationsConfig {
    pub dims: Vec<usize>,
    pub lambdas: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for IterationsConfig {
    fn default() -> Self {
        Self {
            dims: vec![64, 128, 256],
            lambdas: vec![1.0, 5.0, 9.0, 20.0, 50.0],
            trials: 20,
            seed: 1,
            tolerance: SinkhornConfig::DEFAULT_TOLERANCE,
            max_iterations: SinkhornConfig::DEFAULT_MAX_ITERATIONS,
        }
    }
}

/// Iterations until the iterate change drops below the tolerance, per
/// (dimension, trial, lambda). `value` repeats the count as a real.
pub fn run_iterations_experiment(cfg: &IterationsConfig) -> Result<Vec<ExperimentRecord>> {
    check_lambdas(&cfg.lambdas)?;
    if let Some(d) = cfg.dims.iter().find(|&&d| d < 2) {
        return Err(BenchError::usage(format!("dimension {d} is too small")));
    }
    let mut out = Vec::new();
    for &d in &cfg.dims {
        let metric = synthetic_metric(d, cfg.seed ^ d as u64)?;
        for s in seed_stream(cfg.seed, 0x6974_6572 ^ d as u64).take(cfg.trials) {
            let (r, c) = (sample_simplex(d, s)?, sample_simplex(d, s.wrapping_add(1))?);
            for &l in &cfg.lambdas {
                let sk = SinkhornConfig::with_tolerance(l, cfg.tolerance).max_iterations(cfg.max_iterations);
                let start = Instant::now();
                let res = sinkhorn_divergence(&r, &c, &metric, &sk)?;
                let ms = elapsed_ms(start);
                out.push(
                    ExperimentRecord::new("iters", d, "sinkhorn", s, res.iterations as f64)
                        .lambda(l)
                        .timed(ms)
                        .iterations(res.iterations as u64),
                );
            }
        }
    }
    Ok(out)
}

/// Mean iteration count per (dimension, lambda), sorted.
pub fn mean_iterations(records: &[ExperimentRecord]) -> Vec<(usize, f64, f64)> {
    let mut keys: Vec<(usize, f64)> = records.iter().filter_map(|r| r.lambda.map(|l| (r.dimension, l))).collect();
    keys.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    keys.dedup();
    keys.into_iter()
        .map(|(d, l)| {
            let its: Vec<f64> = records.iter().filter(|r| r.dimension == d && r.lambda == Some(l)).map(|r| r.value).collect();
            (d, l, its.iter().sum::<f64>() / its.len() as f64)
        })
        .collect()
}
