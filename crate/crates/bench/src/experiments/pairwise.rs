use std::time::Instant;

use entropic_ot::histogram::sample_simplex;
use entropic_ot::kernels::{baseline_distance, independence_kernel_distance};
use entropic_ot::metric::{grid_euclidean_metric, power_transform, CostMatrix};
use entropic_ot::sinkhorn::sinkhorn_batch;
use entropic_ot::{solve_emd, Histogram, SinkhornConfig};

use super::knn::KnnMethod;
use super::{elapsed_ms, seed_stream, synthetic_metric};
use crate::dataset::LabeledHistogramSet;
use crate::error::{BenchError, Result};
use crate::records::ExperimentRecord;

#[derive(Debug, Clone)]
pub struct PairwiseConfig {
    /// Dimension of uniform-simplex histograms (ignored with data).
    pub dim: usize,
    /// Number of histograms compared against the query.
    pub count: usize,
    pub methods: Vec<KnnMethod>,
    pub lambda: f64,
    pub tolerance: f64,
    /// Replaces the tolerance rule when set.
    pub fixed_iterations: Option<usize>,
    pub independence_exponent: f64,
    pub seed: u64,
}

impl Default for PairwiseConfig {
    fn default() -> Self {
        Self {
            dim: 64,
            count: 16,
            methods: vec![KnnMethod::Sinkhorn, KnnMethod::Emd],
            lambda: 9.0,
            tolerance: SinkhornConfig::DEFAULT_TOLERANCE,
            fixed_iterations: None,
            independence_exponent: 1.0,
            seed: 1,
        }
    }
}

/// Distances from one query histogram to `count` others, one record per
/// (method, target) with the target's position in `seed`. Sinkhorn runs as
/// a single batch; its rows carry the batch time split evenly.
pub fn run_pairwise(cfg: &PairwiseConfig, data: Option<&LabeledHistogramSet>) -> Result<Vec<ExperimentRecord>> {
    if cfg.count == 0 || cfg.methods.is_empty() {
        return Err(BenchError::usage("need at least one target and one method"));
    }
    let (metric, query, targets): (CostMatrix, Histogram, Vec<Histogram>) = match data {
        Some(set) => {
            if set.len() <= cfg.count {
                return Err(BenchError::usage(format!("{} histograms available, {} targets requested", set.len(), cfg.count)));
            }
            let m = grid_euclidean_metric(set.grid.0, set.grid.1)?;
            (m, set.histograms[0].clone(), set.histograms[1..=cfg.count].to_vec())
        }
        None => {
            let mut seeds = seed_stream(cfg.seed, 0x7061_6972);
            let query = sample_simplex(cfg.dim, seeds.next().expect("endless stream"))?;
            let targets = seeds.take(cfg.count).map(|s| sample_simplex(cfg.dim, s)).collect::<entropic_ot::Result<_>>()?;
            (synthetic_metric(cfg.dim, cfg.seed)?, query, targets)
        }
    };
    let d = metric.dim();
    let mut out = Vec::new();
    for &method in &cfg.methods {
        match method {
            KnnMethod::Sinkhorn => {
                let sk = match cfg.fixed_iterations {
                    Some(n) => SinkhornConfig::fixed(cfg.lambda, n),
                    None => SinkhornConfig::with_tolerance(cfg.lambda, cfg.tolerance),
                };
                let start = Instant::now();
                let results = sinkhorn_batch(&query, &targets, &metric, &sk)?;
                let ms = elapsed_ms(start) / targets.len() as f64;
                for (j, res) in results.into_iter().enumerate() {
                    let res = res?;
                    out.push(
                        ExperimentRecord::new("pairwise", d, "sinkhorn", j as u64, res.divergence)
                            .lambda(cfg.lambda)
                            .timed(ms)
                            .iterations(res.iterations as u64),
                    );
                }
            }
            _ => {
                let powered = match method {
                    KnnMethod::Independence => Some(power_transform(&metric, cfg.independence_exponent)?),
                    _ => None,
                };
                for (j, c) in targets.iter().enumerate() {
                    let start = Instant::now();
                    let value = match method {
                        KnnMethod::Emd => solve_emd(&query, c, &metric)?.cost,
                        KnnMethod::Independence => independence_kernel_distance(&query, c, powered.as_ref().expect("set above"))?,
                        KnnMethod::Baseline(kind) => baseline_distance(kind, &query, c)?,
                        KnnMethod::Sinkhorn => unreachable!("handled as a batch"),
                    };
                    out.push(ExperimentRecord::new("pairwise", d, method.name(), j as u64, value).timed(elapsed_ms(start)));
                }
            }
        }
    }
    Ok(out)
}
