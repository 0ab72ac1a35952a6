use entropic_ot_bench::dataset::synthetic_digits;
use entropic_ot_bench::experiments::{
    mean_iterations, run_gap_experiment, run_iterations_experiment, run_knn_eval, run_pairwise, run_timing_experiment, timing_summary,
    GapConfig, IterationsConfig, KnnConfig, KnnMethod, Method, PairwiseConfig, TimingConfig,
};
use entropic_ot_bench::ExperimentRecord;

fn without_times(recs: &[ExperimentRecord]) -> Vec<ExperimentRecord> {
    recs.iter().cloned().map(|r| r.timed(0.0)).collect()
}

#[test]
fn gap_has_one_record_per_pair_and_lambda() {
    let cfg = GapConfig { dim: 20, pairs: 7, lambdas: vec![1.0, 5.0, 20.0], ..GapConfig::default() };
    let recs = run_gap_experiment(&cfg, None).unwrap();
    assert_eq!(recs.len(), 21);
    assert!(recs.iter().all(|r| r.value >= -1e-10 && r.lambda.is_some()));
    assert_eq!(without_times(&recs), without_times(&run_gap_experiment(&cfg, None).unwrap()));
    let bad = GapConfig { lambdas: vec![5.0, 1.0], ..cfg };
    assert!(run_gap_experiment(&bad, None).unwrap_err().is_usage());
}

#[test]
fn gap_on_digit_grid() {
    let data = synthetic_digits(10, 3);
    let cfg = GapConfig { pairs: 2, lambdas: vec![9.0], ..GapConfig::default() };
    let recs = run_gap_experiment(&cfg, Some(&data)).unwrap();
    assert_eq!(recs.len(), 2);
    assert_eq!(recs[0].dimension, 400);
}

#[test]
fn timing_cardinality() {
    let cfg = TimingConfig { dims: vec![16, 32], methods: vec![Method::Emd, Method::Sinkhorn], lambdas: vec![1.0, 9.0], trials: 3, ..TimingConfig::default() };
    let recs = run_timing_experiment(&cfg).unwrap();
    assert_eq!(recs.len(), 2 * 3 * 3);
    let summary = timing_summary(&recs);
    assert_eq!(summary.len(), 6);
    assert!(summary.iter().all(|s| s.trials == 3 && s.median_ms >= 0.0));
    assert!(run_timing_experiment(&TimingConfig { dims: vec![4], ..cfg }).is_err());
}

#[test]
fn iterations_grow_with_lambda() {
    let cfg = IterationsConfig { dims: vec![32], lambdas: vec![1.0, 9.0, 50.0], trials: 4, ..IterationsConfig::default() };
    let recs = run_iterations_experiment(&cfg).unwrap();
    assert_eq!(recs.len(), 12);
    let means = mean_iterations(&recs);
    assert!(means.windows(2).all(|w| w[1].2 > w[0].2), "{means:?}");
}

#[test]
fn knn_records_and_determinism() {
    let data = synthetic_digits(60, 5);
    let methods: Vec<KnnMethod> = ["sinkhorn", "independence", "hellinger"].iter().map(|m| m.parse().unwrap()).collect();
    let cfg = KnnConfig { methods, folds: 3, ..KnnConfig::default() };
    let recs = run_knn_eval(&data, &cfg).unwrap();
    assert_eq!(recs.iter().filter(|r| r.experiment == "knn").count(), 9);
    assert_eq!(recs.iter().filter(|r| r.experiment == "knn-summary").count(), 6);
    assert!(recs.iter().all(|r| (0.0..=1.0).contains(&r.value) || r.experiment != "knn"));
    assert!(recs.iter().filter(|r| r.method == "sinkhorn").all(|r| r.lambda.is_some()));
    assert_eq!(without_times(&recs), without_times(&run_knn_eval(&data, &cfg).unwrap()));
    assert!(run_knn_eval(&synthetic_digits(4, 1), &cfg).unwrap_err().is_usage());
}

#[test]
fn pairwise_matches_direct_solves() {
    let cfg = PairwiseConfig { dim: 12, count: 5, methods: vec![KnnMethod::Sinkhorn, KnnMethod::Emd], ..PairwiseConfig::default() };
    let recs = run_pairwise(&cfg, None).unwrap();
    assert_eq!(recs.len(), 10);
    for (s, e) in recs[..5].iter().zip(&recs[5..]) {
        assert_eq!(s.seed, e.seed);
        assert!(s.value >= e.value - 1e-9, "sinkhorn {} below emd {}", s.value, e.value);
    }
}
