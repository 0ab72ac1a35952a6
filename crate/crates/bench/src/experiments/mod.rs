//! Desk-scale versions of the experiments: gap to the exact distance,
//! timing, iteration counts, nearest-neighbor classification and raw
//! one-vs-many distance dumps.

mod gap;
mod iterations;
mod knn;
mod pairwise;
mod timing;

use std::str::FromStr;
use std::time::Instant;

use entropic_ot::metric::{median_normalize, random_points_metric, CostMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{BenchError, Result};
use crate::records::ExperimentRecord;

pub use gap::{run_gap_experiment, GapConfig};
pub use iterations::{mean_iterations, run_iterations_experiment, IterationsConfig};
pub use knn::{run_knn_eval, KnnConfig, KnnMethod};
pub use pairwise::{run_pairwise, PairwiseConfig};
pub use timing::{run_timing_experiment, timing_summary, TimingConfig, TimingSummary};

/// Solvers the timing experiment compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Emd,
    Sinkhorn,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Emd => "emd",
            Method::Sinkhorn => "sinkhorn",
        }
    }
}

impl FromStr for Method {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "emd" => Ok(Method::Emd),
            "sinkhorn" => Ok(Method::Sinkhorn),
            other => Err(BenchError::usage(format!("unknown method `{other}` (expected emd or sinkhorn)"))),
        }
    }
}

/// The random ground metric of the synthetic protocol: Gaussian points in
/// dimension `d/10`, divided by the median entry.
pub fn synthetic_metric(d: usize, seed: u64) -> Result<CostMatrix> {
    Ok(median_normalize(&random_points_metric(d, seed)?)?)
}

/// Independent stream of per-item seeds.
pub(crate) fn seed_stream(seed: u64, tag: u64) -> impl Iterator<Item = u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ tag.rotate_left(32));
    std::iter::repeat_with(move || rng.random())
}

pub(crate) fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

pub(crate) fn check_lambdas(lambdas: &[f64]) -> Result<()> {
    if lambdas.is_empty() {
        return Err(BenchError::usage("lambda list is empty"));
    }
    if let Some(bad) = lambdas.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
        return Err(BenchError::usage(format!("lambda must be positive, got {bad}")));
    }
    Ok(())
}

/// Median of `value` per distinct lambda, in ascending lambda order.
pub fn median_by_lambda(records: &[ExperimentRecord]) -> Vec<(f64, f64)> {
    let mut lambdas: Vec<f64> = records.iter().filter_map(|r| r.lambda).collect();
    lambdas.sort_by(f64::total_cmp);
    lambdas.dedup();
    lambdas
        .into_iter()
        .map(|l| {
            let vals: Vec<f64> = records.iter().filter(|r| r.lambda == Some(l)).map(|r| r.value).collect();
            (l, entropic_ot::linalg::median(&vals).expect("lambda came from a record"))
        })
        .collect()
}

pub(crate) fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 { values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var.sqrt())
}
