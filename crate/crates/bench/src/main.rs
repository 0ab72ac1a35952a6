use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use entropic_ot_bench::dataset::{load_idx_digits, synthetic_digits, LabeledHistogramSet, DIGIT_GRID};
use entropic_ot_bench::experiments::{
    mean_iterations, median_by_lambda, run_gap_experiment, run_iterations_experiment, run_knn_eval, run_pairwise,
    run_timing_experiment, timing_summary, GapConfig, IterationsConfig, KnnConfig, KnnMethod, Method, PairwiseConfig,
    TimingConfig,
};
use entropic_ot_bench::records::{write_csv, write_results_csv};
use entropic_ot_bench::{BenchError, ExperimentRecord, Result};

/// Sinkhorn and exact transport distances between histograms: desk-scale
/// experiments with CSV output.
#[derive(Parser, Debug)]
#[command(name = "otbench", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Base seed for every random draw
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// CSV destination (stdout when omitted)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Use generated data instead of IDX files
    #[arg(long, global = true)]
    synthetic: bool,
    /// Sinkhorn tolerance on the iterate change
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// Run a fixed number of Sinkhorn iterations instead
    #[arg(long, global = true)]
    fixed_iters: Option<usize>,
    /// IDX image file
    #[arg(long, global = true)]
    images: Option<PathBuf>,
    /// IDX label file
    #[arg(long, global = true)]
    labels: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Relative gap between Sinkhorn and exact distances across lambda
    Gap {
        #[arg(long, default_value_t = 100)]
        dim: usize,
        #[arg(long, default_value_t = 50)]
        pairs: usize,
        #[arg(long, value_delimiter = ',', default_value = "1,2,5,9,20,50")]
        lambdas: Vec<f64>,
    },
    /// Wall time of the exact solver against Sinkhorn
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "64,128,256,512")]
        dims: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "emd,sinkhorn")]
        methods: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "1,9")]
        lambdas: Vec<f64>,
        #[arg(long, default_value_t = 5)]
        trials: usize,
    },
    /// Sinkhorn iterations to convergence across lambda
    Iters {
        #[arg(long, value_delimiter = ',', default_value = "64,128,256")]
        dims: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "1,5,9,20,50")]
        lambdas: Vec<f64>,
        #[arg(long, default_value_t = 20)]
        trials: usize,
    },
    /// One-nearest-neighbor classification error per distance
    Knn {
        #[arg(long, default_value_t = 500)]
        subset: usize,
        #[arg(long, default_value_t = 4)]
        folds: usize,
        #[arg(long, value_delimiter = ',', default_value = "sinkhorn,emd,hellinger,tv,chi2,sqeuclid,independence")]
        methods: Vec<String>,
        /// Keep native image size instead of cropping to 20x20
        #[arg(long)]
        no_crop: bool,
        /// Fix the exponent of the independence kernel's ground metric
        #[arg(long)]
        independence_exponent: Option<f64>,
    },
    /// Distances from one histogram to many others
    Pairwise {
        #[arg(long, default_value_t = 64)]
        dim: usize,
        #[arg(long, default_value_t = 16)]
        count: usize,
        #[arg(long, value_delimiter = ',', default_value = "sinkhorn,emd")]
        methods: Vec<String>,
        #[arg(long, default_value_t = 9.0)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0)]
        independence_exponent: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("otbench: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let c = &cli.common;
    if let Some(t) = c.tolerance {
        if t.is_nan() || t <= 0.0 {
            return Err(BenchError::usage("--tolerance must be positive"));
        }
    }
    if c.fixed_iters == Some(0) {
        return Err(BenchError::usage("--fixed-iters must be at least 1"));
    }
    let tolerance = c.tolerance.unwrap_or(entropic_ot::SinkhornConfig::DEFAULT_TOLERANCE);
    let records = match cli.cmd {
        Command::Gap { dim, pairs, lambdas } => {
            let data = optional_dataset(c, None, Some(DIGIT_GRID))?;
            let cfg = GapConfig { dim, pairs, lambdas, seed: c.seed, tolerance, fixed_iterations: c.fixed_iters, ..GapConfig::default() };
            let recs = run_gap_experiment(&cfg, data.as_ref())?;
            for (l, med) in median_by_lambda(&recs) {
                eprintln!("lambda {l:>8}  median relative gap {med:.6}");
            }
            recs
        }
        Command::Bench { dims, methods, lambdas, trials } => {
            no_fixed_iters(c, "bench")?;
            let methods = methods.iter().map(|m| m.parse::<Method>()).collect::<Result<Vec<_>>>()?;
            let recs = run_timing_experiment(&TimingConfig { dims, methods, lambdas, trials, seed: c.seed, tolerance })?;
            for s in timing_summary(&recs) {
                let label = s.lambda.map_or(s.method.clone(), |l| format!("{}(lambda={l})", s.method));
                eprintln!("d={:<5} {label:<20} mean {:>10.3} ms  median {:>10.3} ms  ({} trials)", s.dimension, s.mean_ms, s.median_ms, s.trials);
            }
            recs
        }
        Command::Iters { dims, lambdas, trials } => {
            no_fixed_iters(c, "iters")?;
            let cfg = IterationsConfig { dims, lambdas, trials, seed: c.seed, tolerance, ..IterationsConfig::default() };
            let recs = run_iterations_experiment(&cfg)?;
            for (d, l, mean) in mean_iterations(&recs) {
                eprintln!("d={d:<5} lambda {l:>8}  mean iterations {mean:.2}");
            }
            recs
        }
        Command::Knn { subset, folds, methods, no_crop, independence_exponent } => {
            let crop = if no_crop { None } else { Some(DIGIT_GRID) };
            let data = match optional_dataset(c, Some(subset), crop)? {
                Some(d) => d,
                None if c.synthetic => synthetic_digits(subset, c.seed),
                None => return Err(BenchError::usage("knn needs --images and --labels, or --synthetic")),
            };
            let methods = methods.iter().map(|m| m.parse::<KnnMethod>()).collect::<Result<Vec<_>>>()?;
            let mut cfg = KnnConfig { methods, folds, seed: c.seed, independence_exponent, ..KnnConfig::default() };
            if let Some(n) = c.fixed_iters {
                cfg.fixed_iterations = n;
            }
            let recs = run_knn_eval(&data, &cfg)?;
            eprintln!("{} histograms from {}", data.len(), data.source);
            for r in recs.iter().filter(|r| r.experiment != "knn") {
                eprintln!("{:<28} {:.4}", r.method, r.value);
            }
            recs
        }
        Command::Pairwise { dim, count, methods, lambda, independence_exponent } => {
            let data = optional_dataset(c, None, Some(DIGIT_GRID))?;
            let methods = methods.iter().map(|m| m.parse::<KnnMethod>()).collect::<Result<Vec<_>>>()?;
            let cfg = PairwiseConfig {
                dim,
                count,
                methods,
                lambda,
                tolerance,
                fixed_iterations: c.fixed_iters,
                independence_exponent,
                seed: c.seed,
            };
            run_pairwise(&cfg, data.as_ref())?
        }
    };
    emit(&records, c)
}

fn no_fixed_iters(c: &Common, cmd: &str) -> Result<()> {
    match c.fixed_iters {
        Some(_) => Err(BenchError::usage(format!("{cmd} measures runs to tolerance; --fixed-iters does not apply"))),
        None => Ok(()),
    }
}

/// IDX digits when both paths are given and `--synthetic` is off,
/// otherwise nothing (callers fall back to generated data).
fn optional_dataset(c: &Common, subset: Option<usize>, crop: Option<usize>) -> Result<Option<LabeledHistogramSet>> {
    if c.synthetic {
        return Ok(None);
    }
    match (&c.images, &c.labels) {
        (Some(images), Some(labels)) => Ok(Some(load_idx_digits(images, labels, subset, crop, c.seed)?)),
        (None, None) => Ok(None),
        _ => Err(BenchError::usage("--images and --labels go together")),
    }
}

fn emit(records: &[ExperimentRecord], c: &Common) -> Result<()> {
    match &c.out {
        Some(path) => write_results_csv(records, path),
        None => write_csv(records, std::io::stdout().lock()),
    }
}
