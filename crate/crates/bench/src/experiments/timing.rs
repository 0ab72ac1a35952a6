use std::time::Instant;

use entropic_ot::histogram::sample_simplex;
use entropic_ot::{solve_emd, sinkhorn_divergence, SinkhornConfig};

use super::{check_lambdas, elapsed_ms, seed_stream, synthetic_metric, Method};
use crate::error::{BenchError, Result};
use crate::records::ExperimentRecord;

#[derive(Debug, Clone)]
pub struct TimingConfig {
    pub dims: Vec<usize>,
    pub methods: Vec<Method>,
    /// Sinkhorn profiles; ignored by `emd`.
    pub lambdas: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub tolerance: f64,
}

impl Default for TimingConfig {
    fn default() -> Self {
        Self {
            dims: vec![64, 128, 256, 512],
            methods: vec![Method::Emd, Method::Sinkhorn],
            lambdas: vec![1.0, 9.0],
            trials: 5,
            seed: 1,
            tolerance: SinkhornConfig::DEFAULT_TOLERANCE,
        }
    }
}

/// Wall time of single-threaded solves on random pairs. Per dimension: a
/// median-normalized random metric, one untimed warm-up of every method,
/// then `trials` pairs. Records are ordered by dimension, trial, method and
/// lambda; `value` is the distance and `seed` the pair's seed.
pub fn run_timing_experiment(cfg: &TimingConfig) -> Result<Vec<ExperimentRecord>> {
    if cfg.methods.is_empty() {
        return Err(BenchError::usage("method list is empty"));
    }
    if cfg.methods.contains(&Method::Sinkhorn) {
        check_lambdas(&cfg.lambdas)?;
    }
    if let Some(d) = cfg.dims.iter().find(|&&d| d < 10) {
        return Err(BenchError::usage(format!("dimension {d} is below 10")));
    }
    let mut out = Vec::new();
    for &d in &cfg.dims {
        let metric = synthetic_metric(d, cfg.seed ^ d as u64)?;
        let mut seeds = seed_stream(cfg.seed, 0x7469_6d65 ^ d as u64);
        let pair = |s: u64| -> Result<_> { Ok((sample_simplex(d, s)?, sample_simplex(d, s.wrapping_add(1))?)) };

        let (r, c) = pair(seeds.next().expect("endless stream"))?;
        for &m in &cfg.methods {
            match m {
                Method::Emd => drop(solve_emd(&r, &c, &metric)?),
                Method::Sinkhorn => {
                    for &l in &cfg.lambdas {
                        sinkhorn_divergence(&r, &c, &metric, &SinkhornConfig::with_tolerance(l, cfg.tolerance))?;
                    }
                }
            }
        }

        for s in seeds.take(cfg.trials) {
            let (r, c) = pair(s)?;
            for &m in &cfg.methods {
                match m {
                    Method::Emd => {
                        let start = Instant::now();
                        let sol = solve_emd(&r, &c, &metric)?;
                        let ms = elapsed_ms(start);
                        out.push(ExperimentRecord::new("bench", d, "emd", s, sol.cost).timed(ms));
                    }
                    Method::Sinkhorn => {
                        for &l in &cfg.lambdas {
                            let sk = SinkhornConfig::with_tolerance(l, cfg.tolerance);
                            let start = Instant::now();
                            let res = sinkhorn_divergence(&r, &c, &metric, &sk)?;
                            let ms = elapsed_ms(start);
                            out.push(
                                ExperimentRecord::new("bench", d, "sinkhorn", s, res.divergence)
                                    .lambda(l)
                                    .timed(ms)
                                    .iterations(res.iterations as u64),
                            );
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingSummary {
    pub dimension: usize,
    pub method: String,
    pub lambda: Option<f64>,
    pub trials: usize,
    pub mean_ms: f64,
    pub median_ms: f64,
}

/// Mean and median wall time per (dimension, method, lambda), in first
/// appearance order.
pub fn timing_summary(records: &[ExperimentRecord]) -> Vec<TimingSummary> {
    let mut keys: Vec<(usize, String, Option<f64>)> = Vec::new();
    for r in records {
        let key = (r.dimension, r.method.clone(), r.lambda);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(dimension, method, lambda)| {
            let times: Vec<f64> = records
                .iter()
                .filter(|r| r.dimension == dimension && r.method == method && r.lambda == lambda)
                .map(|r| r.wall_time_ms)
                .collect();
            TimingSummary {
                dimension,
                method,
                lambda,
                trials: times.len(),
                mean_ms: times.iter().sum::<f64>() / times.len() as f64,
                median_ms: entropic_ot::linalg::median(&times).expect("key came from a record"),
            }
        })
        .collect()
}
