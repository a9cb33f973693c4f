//! Rank and aggregation protocol, checked against the published MAE rows.

use combu::experiment::{
    cross_dataset_ranks, run_experiment, summarize, DatasetSpec, RunReport, SchemeSummary,
};
use combu::metrics::{accuracy, macro_f1, rank_values, Metric, Ties};
use combu::mlp::TrainConfig;
use combu::{ActivationScheme, ExperimentConfig, Formula, ModelSize};

const SCHEMES: [&str; 7] = ["relu", "elu", "selu", "swish", "nlrelu", "gelu", "combu"];
const GS_MAE: [f64; 7] = [0.088, 0.114, 0.138, 0.168, 0.078, 0.147, 0.073];
const AR_MAE: [f64; 7] = [0.029, 0.067, 0.050, 0.045, 0.041, 0.032, 0.027];
const NS_MAE: [f64; 7] = [0.106, 0.162, 0.155, 0.157, 0.111, 0.131, 0.111];
const BS_MAE: [f64; 7] = [0.116, 0.133, 0.136, 0.128, 0.119, 0.120, 0.115];

#[test]
fn published_gs_means_rank_combu_first_relu_third() {
    let ranks = rank_values(&GS_MAE, false, Ties::Average);
    assert_eq!(ranks, [3.0, 4.0, 5.0, 7.0, 2.0, 6.0, 1.0]);
}

#[test]
fn score_metrics_rank_descending() {
    assert_eq!(
        rank_values(&[0.9, 0.7, 0.8], true, Ties::Average),
        [1.0, 3.0, 2.0]
    );
    assert_eq!(
        rank_values(&[0.5, 0.5, 0.1], true, Ties::Average),
        [1.5, 1.5, 3.0]
    );
    assert_eq!(
        rank_values(&[0.5, 0.5, 0.1], true, Ties::Min),
        [1.0, 1.0, 3.0]
    );
}

fn report_from_means(label: &str, means: &[f64]) -> RunReport {
    let summary = SCHEMES
        .iter()
        .zip(means)
        .map(|(s, m)| SchemeSummary {
            scheme: s.to_string(),
            metric: Metric::Mae,
            runs: 5,
            mean: Some(*m),
            std: Some(0.0),
            avg_rank: None,
        })
        .collect();
    RunReport {
        label: label.into(),
        config: ExperimentConfig::new(DatasetSpec::Formula {
            formula: Formula::Gs,
            n: 5000,
        }),
        task: combu::Task::Regression,
        n_rows: 5000,
        bin_edges: None,
        runs: vec![],
        summary,
        diverged_runs: 0,
    }
}

fn cross(ties: Ties) -> Vec<f64> {
    let reports: Vec<RunReport> = [
        ("gs", GS_MAE),
        ("ar", AR_MAE),
        ("ns", NS_MAE),
        ("bs", BS_MAE),
    ]
    .iter()
    .map(|(l, m)| report_from_means(l, m))
    .collect();
    let rows = cross_dataset_ranks(&reports, ties);
    SCHEMES
        .iter()
        .map(|s| rows.iter().find(|r| r.scheme == *s).unwrap().avg_rank)
        .collect()
}

#[test]
fn published_average_rank_row_needs_min_ties() {
    // The printed row: 2, 6, 5.75, 5.75, 2.75, 4.24, 1.25 (4.24 is 17/4 rounded down).
    assert_eq!(cross(Ties::Min), [2.0, 6.0, 5.75, 5.75, 2.75, 4.25, 1.25]);
}

#[test]
fn average_ties_split_the_ns_tie() {
    let avg = cross(Ties::Average);
    assert_eq!(avg[6], 1.375);
    assert_eq!(avg[4], 2.875);
    // CombU stays first either way.
    let best = avg.iter().cloned().fold(f64::INFINITY, f64::min);
    assert_eq!(avg[6], best);
}

#[test]
fn classification_metrics_worked_example() {
    let truth = [0, 0, 1, 1, 2, 2];
    let pred = [0, 1, 1, 1, 2, 0];
    assert!((accuracy(&pred, &truth).unwrap() - 4.0 / 6.0).abs() < 1e-15);
    // Per class F1: 2/4, 4/5, 2/3.
    let want = (0.5 + 0.8 + 2.0 / 3.0) / 3.0;
    assert!((macro_f1(&pred, &truth, 3).unwrap() - want).abs() < 1e-15);
}

fn small_config() -> ExperimentConfig {
    ExperimentConfig {
        schemes: vec![
            ActivationScheme::Uniform(combu::ActivationKind::Relu),
            ActivationScheme::Uniform(combu::ActivationKind::NLRELU),
            ActivationScheme::combu(),
        ],
        model: ModelSize::Small,
        train: TrainConfig {
            epochs: 3,
            batch_size: 64,
            ..TrainConfig::paper()
        },
        repeats: 3,
        base_seed: 42,
        ..ExperimentConfig::new(DatasetSpec::Formula {
            formula: Formula::Gs,
            n: 400,
        })
    }
}

#[test]
fn persisted_runs_reproduce_the_summary() {
    let report = run_experiment(&small_config(), 1).unwrap();
    let json = serde_json::to_string(&report).unwrap();
    let back: RunReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back, report);
    for s in &back.summary {
        let values: Vec<f64> = back
            .runs
            .iter()
            .filter(|r| r.scheme == s.scheme && !r.diverged)
            .map(|r| r.metrics[&s.metric])
            .collect();
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        assert_eq!(s.mean, Some(mean));
        assert_eq!(s.std, Some(std));
    }
    let names: Vec<String> = small_config()
        .schemes
        .iter()
        .map(|s| s.to_string())
        .collect();
    assert_eq!(
        summarize(&names, &[Metric::Mae, Metric::Mse], 3, &back.runs),
        back.summary
    );
}

#[test]
fn ranks_per_repeat_average_to_the_summary() {
    let report = run_experiment(&small_config(), 1).unwrap();
    for metric in [Metric::Mae, Metric::Mse] {
        let mut sums = [0.0; 3];
        for repeat in 0..3 {
            let vals: Vec<f64> = ["relu", "nlrelu", "combu"]
                .iter()
                .map(|s| {
                    report
                        .runs
                        .iter()
                        .find(|r| r.repeat == repeat && r.scheme == *s)
                        .unwrap()
                        .metrics[&metric]
                })
                .collect();
            for (k, r) in rank_values(&vals, false, Ties::Average).iter().enumerate() {
                sums[k] += r;
            }
        }
        for (k, s) in ["relu", "nlrelu", "combu"].iter().enumerate() {
            assert_eq!(
                report.summary_for(s, metric).unwrap().avg_rank,
                Some(sums[k] / 3.0)
            );
        }
        // Ranks over three schemes average to 2.
        let total: f64 = sums.iter().sum::<f64>() / 3.0;
        assert_eq!(total, 6.0);
    }
}

#[test]
fn repeat_seeds_are_base_xor_index() {
    let report = run_experiment(&small_config(), 1).unwrap();
    for r in &report.runs {
        assert_eq!(r.seed, 42 ^ r.repeat as u64);
    }
}

#[test]
fn parallel_and_serial_reports_match_bytewise() {
    let cfg = small_config();
    let a = serde_json::to_vec(&run_experiment(&cfg, 1).unwrap()).unwrap();
    let b = serde_json::to_vec(&run_experiment(&cfg, 4).unwrap()).unwrap();
    let c = serde_json::to_vec(&run_experiment(&cfg, 1).unwrap()).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, c);
}
