use std::str::FromStr;
use std::time::Instant;

use entropic_ot::kernels::{baseline_distance, BaselineKind};
use entropic_ot::metric::{grid_euclidean_metric, power_transform, CostMatrix};
use entropic_ot::sinkhorn::{gibbs_kernel, sinkhorn_batch_with_kernel};
use entropic_ot::{solve_emd, Histogram, Matrix, SinkhornConfig};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{elapsed_ms, mean_std, seed_stream};
use crate::dataset::LabeledHistogramSet;
use crate::error::{BenchError, Result};
use crate::records::ExperimentRecord;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KnnMethod {
    Sinkhorn,
    Emd,
    Independence,
    Baseline(BaselineKind),
}

impl KnnMethod {
    pub const ALL: [KnnMethod; 7] = [
        KnnMethod::Sinkhorn,
        KnnMethod::Emd,
        KnnMethod::Baseline(BaselineKind::Hellinger),
        KnnMethod::Baseline(BaselineKind::TotalVariation),
        KnnMethod::Baseline(BaselineKind::ChiSquared),
        KnnMethod::Baseline(BaselineKind::SquaredEuclidean),
        KnnMethod::Independence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KnnMethod::Sinkhorn => "sinkhorn",
            KnnMethod::Emd => "emd",
            KnnMethod::Independence => "independence",
            KnnMethod::Baseline(k) => k.name(),
        }
    }
}

impl FromStr for KnnMethod {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sinkhorn" => Ok(KnnMethod::Sinkhorn),
            "emd" => Ok(KnnMethod::Emd),
            "independence" => Ok(KnnMethod::Independence),
            other => other.parse().map(KnnMethod::Baseline).map_err(|_| BenchError::usage(format!("unknown distance `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct KnnConfig {
    pub methods: Vec<KnnMethod>,
    pub folds: usize,
    pub seed: u64,
    /// Sinkhorn iterations per distance.
    pub fixed_iterations: usize,
    /// Sinkhorn candidates are these factors over the median pixel distance.
    pub lambda_factors: Vec<f64>,
    /// Exponent `a` of the independence kernel's `M^a`; chosen per fold
    /// from `{0.01, 0.1, 1}` when `None`.
    pub independence_exponent: Option<f64>,
}

impl Default for KnnConfig {
    fn default() -> Self {
        Self {
            methods: KnnMethod::ALL.to_vec(),
            folds: 4,
            seed: 1,
            fixed_iterations: SinkhornConfig::DEFAULT_FIXED_ITERATIONS,
            lambda_factors: vec![5.0, 7.0, 9.0, 11.0],
            independence_exponent: None,
        }
    }
}

const EXPONENT_GRID: [f64; 3] = [0.01, 0.1, 1.0];

/// One-nearest-neighbor error of each distance. Each fold in turn is the
/// training set and the remaining folds are the test set. Sinkhorn's
/// lambda (and the independence exponent, unless fixed) is picked on a
/// held-out half of the training fold. Emits one `knn` record per (fold,
/// method), then `knn-summary` rows with the mean and standard deviation,
/// plus a `knn-warning` row when empty images were skipped at ingestion.
pub fn run_knn_eval(data: &LabeledHistogramSet, cfg: &KnnConfig) -> Result<Vec<ExperimentRecord>> {
    if cfg.methods.is_empty() {
        return Err(BenchError::usage("method list is empty"));
    }
    if cfg.folds < 2 || data.len() < 2 * cfg.folds {
        return Err(BenchError::usage(format!("{} histograms cannot be split into {} folds", data.len(), cfg.folds)));
    }
    if cfg.lambda_factors.is_empty() || cfg.fixed_iterations == 0 {
        return Err(BenchError::usage("sinkhorn needs lambda candidates and at least one iteration"));
    }
    let metric = grid_euclidean_metric(data.grid.0, data.grid.1)?;
    let d = metric.dim();
    let scale = metric.median_entry();
    let ctx = Context { data, metric: &metric, cfg, lambdas: cfg.lambda_factors.iter().map(|f| f / scale).collect() };

    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));
    let bounds: Vec<usize> = (0..=cfg.folds).map(|k| k * data.len() / cfg.folds).collect();

    let mut out = Vec::new();
    let mut errors: Vec<Vec<f64>> = vec![Vec::new(); cfg.methods.len()];
    for (fold, fold_seed) in seed_stream(cfg.seed, 0x6b6e_6e00).take(cfg.folds).enumerate() {
        let train: Vec<usize> = order[bounds[fold]..bounds[fold + 1]].to_vec();
        let test: Vec<usize> = order.iter().copied().filter(|i| !train.contains(i)).collect();
        let mut split = train.clone();
        split.shuffle(&mut ChaCha8Rng::seed_from_u64(fold_seed));
        let (fit, held) = split.split_at(split.len() / 2);

        for (slot, &method) in cfg.methods.iter().enumerate() {
            let start = Instant::now();
            let param = ctx.select(method, fit, held)?;
            let err = ctx.error(method, param, &test, &train)?;
            let mut rec = ExperimentRecord::new("knn", d, method.name(), fold_seed, err).timed(elapsed_ms(start));
            if method == KnnMethod::Sinkhorn {
                rec = rec.lambda(param);
            }
            out.push(rec);
            errors[slot].push(err);
        }
    }
    for (method, errs) in cfg.methods.iter().zip(&errors) {
        let (mean, std) = mean_std(errs);
        out.push(ExperimentRecord::new("knn-summary", d, &format!("{}:mean", method.name()), cfg.seed, mean));
        out.push(ExperimentRecord::new("knn-summary", d, &format!("{}:std", method.name()), cfg.seed, std));
    }
    if !data.skipped.is_empty() {
        out.push(ExperimentRecord::new("knn-warning", d, "skipped-empty-images", cfg.seed, data.skipped.len() as f64));
    }
    Ok(out)
}

struct Context<'a> {
    data: &'a LabeledHistogramSet,
    metric: &'a CostMatrix,
    cfg: &'a KnnConfig,
    lambdas: Vec<f64>,
}

impl Context<'_> {
    /// Parameter for `method` (lambda or exponent) with the lowest error of
    /// `held` against `fit`; ties go to the earlier candidate.
    fn select(&self, method: KnnMethod, fit: &[usize], held: &[usize]) -> Result<f64> {
        let candidates: Vec<f64> = match method {
            KnnMethod::Sinkhorn => self.lambdas.clone(),
            KnnMethod::Independence => match self.cfg.independence_exponent {
                Some(a) => return Ok(a),
                None => EXPONENT_GRID.to_vec(),
            },
            _ => return Ok(0.0),
        };
        let mut best = (f64::INFINITY, candidates[0]);
        for &p in &candidates {
            let err = self.error(method, p, held, fit)?;
            if err < best.0 {
                best = (err, p);
            }
        }
        Ok(best.1)
    }

    /// 1-NN error of `queries` classified by their nearest `refs`.
    fn error(&self, method: KnnMethod, param: f64, queries: &[usize], refs: &[usize]) -> Result<f64> {
        let table = self.distances(method, param, queries, refs)?;
        let wrong = queries
            .iter()
            .zip(&table)
            .filter(|(&q, row)| {
                let nearest = row.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).map(|(k, _)| refs[k]).expect("nonempty refs");
                self.data.labels[nearest] != self.data.labels[q]
            })
            .count();
        Ok(wrong as f64 / queries.len() as f64)
    }

    fn distances(&self, method: KnnMethod, param: f64, queries: &[usize], refs: &[usize]) -> Result<Vec<Vec<f64>>> {
        let h = &self.data.histograms;
        Ok(match method {
            KnnMethod::Sinkhorn => {
                let cols: Vec<Histogram> = refs.iter().map(|&j| h[j].clone()).collect();
                let sk = SinkhornConfig::fixed(param, self.cfg.fixed_iterations);
                let mut table = Vec::with_capacity(queries.len());
                for &q in queries {
                    let kernel = gibbs_kernel(self.metric, param, &h[q])?;
                    let row = sinkhorn_batch_with_kernel(&kernel, &h[q], &cols, &sk)?;
                    table.push(row.into_iter().map(|r| r.map_or(f64::INFINITY, |r| r.divergence)).collect());
                }
                table
            }
            KnnMethod::Emd => queries
                .iter()
                .map(|&q| refs.iter().map(|&j| solve_emd(&h[q], &h[j], self.metric).map(|s| s.cost)).collect::<entropic_ot::Result<Vec<_>>>())
                .collect::<entropic_ot::Result<_>>()?,
            KnnMethod::Independence => {
                let powered = power_transform(self.metric, param)?;
                let stack = |idx: &[usize]| {
                    Matrix::from_fn(idx.len(), self.metric.dim(), |a, k| h[idx[a]].weights()[k])
                };
                let prod = stack(queries).matmul(powered.entries()).matmul(&stack(refs).transpose());
                (0..queries.len()).map(|a| prod.row(a).to_vec()).collect()
            }
            KnnMethod::Baseline(kind) => queries
                .iter()
                .map(|&q| refs.iter().map(|&j| baseline_distance(kind, &h[q], &h[j])).collect::<entropic_ot::Result<Vec<_>>>())
                .collect::<entropic_ot::Result<_>>()?,
        })
    }
}
