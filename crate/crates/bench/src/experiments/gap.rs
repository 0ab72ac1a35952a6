use std::time::Instant;

use entropic_ot::histogram::{sample_simplex, Histogram};
use entropic_ot::metric::{grid_euclidean_metric, median_normalize, CostMatrix};
use entropic_ot::{solve_emd, sinkhorn_divergence, SinkhornConfig};
use rand::Rng;

use super::{check_lambdas, elapsed_ms, seed_stream, synthetic_metric};
use crate::dataset::LabeledHistogramSet;
use crate::error::{BenchError, Result};
use crate::records::ExperimentRecord;

type PairDraw<'a> = Box<dyn Fn(u64) -> Result<(Histogram, Histogram)> + 'a>;

#[derive(Debug, Clone)]
pub struct GapConfig {
    /// Histogram dimension for uniform-simplex pairs (ignored with data).
    pub dim: usize,
    pub pairs: usize,
    /// Ascending.
    pub lambdas: Vec<f64>,
    pub seed: u64,
    pub tolerance: f64,
    /// Replaces the tolerance rule when set.
    pub fixed_iterations: Option<usize>,
    pub max_iterations: usize,
}

impl Default for GapConfig {
    fn default() -> Self {
        Self {
            dim: 100,
            pairs: 50,
            lambdas: vec![1.0, 2.0, 5.0, 9.0, 20.0, 50.0],
            seed: 1,
            tolerance: SinkhornConfig::DEFAULT_TOLERANCE,
            fixed_iterations: None,
            max_iterations: SinkhornConfig::DEFAULT_MAX_ITERATIONS,
        }
    }
}

/// Relative gap `(d^lambda - d_M) / d_M` for every pair and lambda, one
/// record per (pair, lambda) in pair-major order. The `seed` column holds
/// the seed the pair was drawn from.
pub fn run_gap_experiment(cfg: &GapConfig, data: Option<&LabeledHistogramSet>) -> Result<Vec<ExperimentRecord>> {
    check_lambdas(&cfg.lambdas)?;
    if cfg.lambdas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(BenchError::usage("lambda list must be strictly ascending"));
    }
    let (metric, draw): (CostMatrix, PairDraw) = match data {
        Some(set) => {
            if set.len() < 2 {
                return Err(BenchError::usage("gap experiment needs at least two histograms"));
            }
            let m = median_normalize(&grid_euclidean_metric(set.grid.0, set.grid.1)?)?;
            let draw = move |s: u64| {
                let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(s);
                let a = rng.random_range(0..set.len());
                let b = (a + rng.random_range(1..set.len())) % set.len();
                Ok((set.histograms[a].clone(), set.histograms[b].clone()))
            };
            (m, Box::new(draw))
        }
        None => {
            let d = cfg.dim;
            let draw = move |s: u64| Ok((sample_simplex(d, s)?, sample_simplex(d, s.wrapping_add(1))?));
            (synthetic_metric(d, cfg.seed)?, Box::new(draw))
        }
    };
    let d = metric.dim();
    let mut out = Vec::with_capacity(cfg.pairs * cfg.lambdas.len());
    for pair_seed in seed_stream(cfg.seed, 0x6761_7000).take(cfg.pairs) {
        let (r, c) = draw(pair_seed)?;
        let exact = solve_emd(&r, &c, &metric)?.cost;
        for &lambda in &cfg.lambdas {
            let sk = match cfg.fixed_iterations {
                Some(n) => SinkhornConfig::fixed(lambda, n),
                None => SinkhornConfig::with_tolerance(lambda, cfg.tolerance).max_iterations(cfg.max_iterations),
            };
            let start = Instant::now();
            let res = sinkhorn_divergence(&r, &c, &metric, &sk)?;
            let ms = elapsed_ms(start);
            let gap = if exact > 0.0 { (res.divergence - exact) / exact } else { res.divergence };
            out.push(
                ExperimentRecord::new("gap", d, "sinkhorn", pair_seed, gap).lambda(lambda).timed(ms).iterations(res.iterations as u64),
            );
        }
    }
    Ok(out)
}
