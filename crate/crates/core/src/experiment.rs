//! Repeated train/test runs over activation schemes, with mean ± std and
//! average ranks per metric.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datasets::{
    csv_read, make_classification, split_and_fit, CsvSchema, Formula, Preprocessor, TabularDataset,
    Task, DEFAULT_BINS,
};
use crate::error::{param_err, Error, Result};
use crate::linalg::Matrix;
use crate::metrics::{self, aggregate, argmax, rank_values, Metric, Ties};
use crate::mlp::{
    build_paper_mlp, train_with_rng, ActivationScheme, Head, LayeredNetwork, ModelSize, Targets,
    TrainConfig,
};
use crate::rng::Rng;

/// Stream (under the base seed) that generates formula datasets.
pub const DATA_STREAM: u64 = 0xDA7A;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum DatasetSpec {
    Formula { formula: Formula, n: usize },
    Csv { path: PathBuf, schema: CsvSchema },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum TaskSpec {
    /// Use the dataset's own target.
    #[default]
    Native,
    /// Bin a regression target into equal-frequency classes.
    Binned {
        #[serde(default = "default_bins")]
        n_bins: usize,
    },
}

fn default_bins() -> usize {
    DEFAULT_BINS
}
fn default_repeats() -> usize {
    5
}
fn default_test_fraction() -> f64 {
    0.2
}
fn default_model() -> ModelSize {
    ModelSize::Large
}
fn default_schemes() -> Vec<ActivationScheme> {
    ActivationScheme::table_schemes()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub dataset: DatasetSpec,
    #[serde(default)]
    pub task: TaskSpec,
    #[serde(default = "default_schemes")]
    pub schemes: Vec<ActivationScheme>,
    #[serde(default = "default_model")]
    pub model: ModelSize,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    /// Largest tolerated share of diverged runs; the CLI exits with a
    /// distinct status above it.
    #[serde(default)]
    pub max_diverged_fraction: f64,
}

impl ExperimentConfig {
    pub fn new(dataset: DatasetSpec) -> Self {
        Self {
            name: None,
            dataset,
            task: TaskSpec::Native,
            schemes: default_schemes(),
            model: default_model(),
            train: TrainConfig::paper(),
            repeats: default_repeats(),
            base_seed: 0,
            test_fraction: default_test_fraction(),
            max_diverged_fraction: 0.0,
        }
    }

    pub fn label(&self) -> String {
        if let Some(name) = &self.name {
            return name.clone();
        }
        let base = match &self.dataset {
            DatasetSpec::Formula { formula, .. } => formula.name().to_string(),
            DatasetSpec::Csv { path, .. } => path
                .file_stem()
                .map_or_else(|| "csv".into(), |s| s.to_string_lossy().into_owned()),
        };
        match self.task {
            TaskSpec::Native => base,
            TaskSpec::Binned { .. } => format!("{base}_cls"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(param_err!("repeats must be at least 1"));
        }
        if self.schemes.is_empty() {
            return Err(param_err!("at least one activation scheme is required"));
        }
        let mut labels: Vec<String> = self.schemes.iter().map(ToString::to_string).collect();
        labels.sort();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(param_err!("activation schemes must be distinct"));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(param_err!("test_fraction must lie in (0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.max_diverged_fraction) {
            return Err(param_err!("max_diverged_fraction must lie in [0, 1]"));
        }
        if let DatasetSpec::Formula { n, .. } = self.dataset {
            if n == 0 {
                return Err(param_err!("dataset size must be at least 1"));
            }
        }
        self.train.validate()
    }

    /// The full dataset, before any split: generated from the base seed's
    /// data stream or read from disk, then binned if requested.
    pub fn load_dataset(&self) -> Result<(TabularDataset, Option<Vec<f64>>)> {
        let ds = match &self.dataset {
            DatasetSpec::Formula { formula, n } => {
                formula.generate(*n, &mut Rng::new(self.base_seed).child(DATA_STREAM))?
            }
            DatasetSpec::Csv { path, schema } => csv_read(path, schema)?,
        };
        match self.task {
            TaskSpec::Native => Ok((ds, None)),
            TaskSpec::Binned { n_bins } => {
                let (binned, edges) = make_classification(&ds, n_bins)?;
                Ok((binned, Some(edges)))
            }
        }
    }

    pub fn metrics(&self, task: Task) -> &'static [Metric] {
        match task {
            Task::Regression => &Metric::REGRESSION,
            Task::Classification { .. } => &Metric::CLASSIFICATION,
        }
    }
}

pub fn repeat_seed(base_seed: u64, repeat: usize) -> u64 {
    base_seed ^ repeat as u64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub scheme: String,
    pub repeat: usize,
    pub seed: u64,
    pub diverged: bool,
    pub epochs_completed: usize,
    pub final_train_loss: Option<f64>,
    /// Test metrics; empty for diverged runs.
    pub metrics: BTreeMap<Metric, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemeSummary {
    pub scheme: String,
    pub metric: Metric,
    /// Non-diverged runs aggregated.
    pub runs: usize,
    pub mean: Option<f64>,
    pub std: Option<f64>,
    /// Mean over repeats of the scheme's rank among that repeat's
    /// non-diverged runs.
    pub avg_rank: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub label: String,
    pub config: ExperimentConfig,
    pub task: Task,
    pub n_rows: usize,
    pub bin_edges: Option<Vec<f64>>,
    pub runs: Vec<RunRecord>,
    pub summary: Vec<SchemeSummary>,
    pub diverged_runs: usize,
}

impl RunReport {
    pub fn diverged_fraction(&self) -> f64 {
        self.diverged_runs as f64 / self.runs.len().max(1) as f64
    }

    pub fn exceeds_divergence_limit(&self) -> bool {
        self.diverged_fraction() > self.config.max_diverged_fraction
    }

    pub fn summary_for(&self, scheme: &str, metric: Metric) -> Option<&SchemeSummary> {
        self.summary
            .iter()
            .find(|s| s.scheme == scheme && s.metric == metric)
    }

    /// `scheme,metric,mean,std,avg_rank`; undefined values are left empty.
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["scheme", "metric", "mean", "std", "avg_rank"])?;
        let fmt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
        for s in &self.summary {
            out.write_record([
                s.scheme.clone(),
                s.metric.to_string(),
                fmt(s.mean),
                fmt(s.std),
                fmt(s.avg_rank),
            ])?;
        }
        out.flush().map_err(|e| Error::io("<csv output>", e))?;
        Ok(())
    }
}

/// One trained model together with what is needed to reuse it.
#[derive(Clone, Debug)]
pub struct FittedRun {
    pub record: RunRecord,
    pub network: LayeredNetwork,
    pub preprocessor: Preprocessor,
    pub epoch_losses: Vec<f64>,
}

/// Splits, trains and scores one scheme on repeat `repeat`, with every
/// random choice drawn from `base_seed ⊕ repeat`.
pub fn fit_one(
    cfg: &ExperimentConfig,
    ds: &TabularDataset,
    scheme: &ActivationScheme,
    repeat: usize,
) -> Result<FittedRun> {
    let seed = repeat_seed(cfg.base_seed, repeat);
    let rep = Rng::new(seed);
    let (train, test, pre) = split_and_fit(ds, cfg.test_fraction, &mut rep.child(0))?;
    let x_train = pre.transform_features(&train)?;
    let y_train = pre.transform_targets(&train)?;
    let x_test = pre.transform_features(&test)?;
    let y_test = pre.transform_targets(&test)?;
    let (out_dim, head) = match ds.task() {
        Task::Regression => (1, Head::Identity),
        Task::Classification { n_classes } => (n_classes, Head::Softmax),
    };
    let mut net = build_paper_mlp(
        x_train.cols(),
        out_dim,
        cfg.model,
        scheme,
        head,
        &rep.child(1),
    )?;
    let report = train_with_rng(&mut net, &x_train, &y_train, &cfg.train, &mut rep.child(2))?;
    let mut record = RunRecord {
        scheme: scheme.to_string(),
        repeat,
        seed,
        diverged: report.diverged,
        epochs_completed: report.epoch_losses.len(),
        final_train_loss: report
            .epoch_losses
            .last()
            .copied()
            .filter(|v| v.is_finite()),
        metrics: BTreeMap::new(),
    };
    if !record.diverged {
        let pred = net.predict_batch(&x_test)?;
        if pred.is_finite() {
            record.metrics = score(&pred, y_test)?;
        } else {
            record.diverged = true;
        }
    }
    Ok(FittedRun {
        record,
        network: net,
        preprocessor: pre,
        epoch_losses: report.epoch_losses,
    })
}

fn score(pred: &Matrix, truth: Targets) -> Result<BTreeMap<Metric, f64>> {
    let mut out = BTreeMap::new();
    match truth {
        Targets::Regression(y) => {
            out.insert(Metric::Mae, metrics::mae(pred.as_slice(), y.as_slice())?);
            out.insert(Metric::Mse, metrics::mse(pred.as_slice(), y.as_slice())?);
        }
        Targets::Classes { labels, n_classes } => {
            let guess: Vec<usize> = (0..pred.rows()).map(|r| argmax(pred.row(r))).collect();
            out.insert(Metric::Accuracy, metrics::accuracy(&guess, &labels)?);
            out.insert(Metric::F1, metrics::macro_f1(&guess, &labels, n_classes)?);
        }
    }
    Ok(out)
}

fn run_one(
    cfg: &ExperimentConfig,
    ds: &TabularDataset,
    scheme: &ActivationScheme,
    repeat: usize,
) -> Result<RunRecord> {
    fit_one(cfg, ds, scheme, repeat).map(|f| f.record)
}

/// Per-scheme mean ± std and per-repeat average ranks.
pub fn summarize(
    schemes: &[String],
    metrics: &[Metric],
    repeats: usize,
    runs: &[RunRecord],
) -> Vec<SchemeSummary> {
    let mut out = Vec::with_capacity(schemes.len() * metrics.len());
    for &metric in metrics {
        let mut rank_sums = vec![(0.0, 0usize); schemes.len()];
        for repeat in 0..repeats {
            let entries: Vec<(usize, f64)> = schemes
                .iter()
                .enumerate()
                .filter_map(|(i, s)| {
                    runs.iter()
                        .find(|r| r.repeat == repeat && &r.scheme == s && !r.diverged)
                        .and_then(|r| r.metrics.get(&metric))
                        .map(|&v| (i, v))
                })
                .collect();
            let values: Vec<f64> = entries.iter().map(|e| e.1).collect();
            let ranks = rank_values(&values, metric.higher_is_better(), Ties::Average);
            for ((i, _), rank) in entries.iter().zip(ranks) {
                rank_sums[*i].0 += rank;
                rank_sums[*i].1 += 1;
            }
        }
        for (i, scheme) in schemes.iter().enumerate() {
            let values: Vec<f64> = runs
                .iter()
                .filter(|r| &r.scheme == scheme && !r.diverged)
                .filter_map(|r| r.metrics.get(&metric).copied())
                .collect();
            let agg = aggregate(&values);
            let (sum, count) = rank_sums[i];
            out.push(SchemeSummary {
                scheme: scheme.clone(),
                metric,
                runs: values.len(),
                mean: agg.map(|a| a.0),
                std: agg.map(|a| a.1),
                avg_rank: (count > 0).then(|| sum / count as f64),
            });
        }
    }
    out
}

/// Runs every (repeat, scheme) pair on up to `jobs` threads. Results do not
/// depend on `jobs`.
pub fn run_experiment(cfg: &ExperimentConfig, jobs: usize) -> Result<RunReport> {
    cfg.validate()?;
    let (ds, bin_edges) = cfg.load_dataset()?;
    let pairs: Vec<(usize, usize)> = (0..cfg.repeats)
        .flat_map(|r| (0..cfg.schemes.len()).map(move |s| (r, s)))
        .collect();
    let work = || {
        pairs
            .par_iter()
            .map(|&(repeat, s)| run_one(cfg, &ds, &cfg.schemes[s], repeat))
            .collect::<Result<Vec<_>>>()
    };
    let runs = if jobs <= 1 {
        pairs
            .iter()
            .map(|&(repeat, s)| run_one(cfg, &ds, &cfg.schemes[s], repeat))
            .collect::<Result<Vec<_>>>()?
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Internal(format!("thread pool: {e}")))?
            .install(work)?
    };
    let names: Vec<String> = cfg.schemes.iter().map(ToString::to_string).collect();
    let summary = summarize(&names, cfg.metrics(ds.task()), cfg.repeats, &runs);
    let diverged_runs = runs.iter().filter(|r| r.diverged).count();
    Ok(RunReport {
        label: cfg.label(),
        config: cfg.clone(),
        task: ds.task(),
        n_rows: ds.n_rows(),
        bin_edges,
        runs,
        summary,
        diverged_runs,
    })
}

/// Average over reports of each scheme's rank of mean value per metric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossSummary {
    pub scheme: String,
    pub metric: Metric,
    pub datasets: usize,
    pub avg_rank: f64,
}

pub fn cross_dataset_ranks(reports: &[RunReport], ties: Ties) -> Vec<CrossSummary> {
    let mut acc: BTreeMap<(Metric, String), (f64, usize)> = BTreeMap::new();
    let mut order: Vec<(Metric, String)> = Vec::new();
    for report in reports {
        let mut by_metric: BTreeMap<Metric, Vec<(&str, f64)>> = BTreeMap::new();
        for s in &report.summary {
            if let Some(mean) = s.mean {
                by_metric
                    .entry(s.metric)
                    .or_default()
                    .push((&s.scheme, mean));
            }
        }
        for (metric, entries) in by_metric {
            let values: Vec<f64> = entries.iter().map(|e| e.1).collect();
            let ranks = rank_values(&values, metric.higher_is_better(), ties);
            for ((scheme, _), rank) in entries.into_iter().zip(ranks) {
                let key = (metric, scheme.to_string());
                if !acc.contains_key(&key) {
                    order.push(key.clone());
                }
                let e = acc.entry(key).or_insert((0.0, 0));
                e.0 += rank;
                e.1 += 1;
            }
        }
    }
    order.sort_by_key(|k| k.0);
    order
        .into_iter()
        .map(|key| {
            let (sum, n) = acc[&key];
            CrossSummary {
                scheme: key.1,
                metric: key.0,
                datasets: n,
                avg_rank: sum / n as f64,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::ActivationKind;

    fn record(scheme: &str, repeat: usize, mae: f64) -> RunRecord {
        RunRecord {
            scheme: scheme.into(),
            repeat,
            seed: repeat as u64,
            diverged: false,
            epochs_completed: 1,
            final_train_loss: Some(0.0),
            metrics: BTreeMap::from([(Metric::Mae, mae)]),
        }
    }

    #[test]
    fn strictly_better_scheme_ranks_first() {
        let runs = vec![
            record("a", 0, 0.1),
            record("b", 0, 0.2),
            record("a", 1, 0.3),
            record("b", 1, 0.4),
        ];
        let s = summarize(&["a".into(), "b".into()], &[Metric::Mae], 2, &runs);
        assert_eq!(s[0].avg_rank, Some(1.0));
        assert_eq!(s[1].avg_rank, Some(2.0));
        assert!((s[0].mean.unwrap() - 0.2).abs() < 1e-15);
        assert!((s[0].std.unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn diverged_runs_are_excluded() {
        let mut bad = record("b", 0, 0.0);
        bad.diverged = true;
        bad.metrics.clear();
        let runs = vec![record("a", 0, 0.5), bad];
        let s = summarize(&["a".into(), "b".into()], &[Metric::Mae], 1, &runs);
        assert_eq!(s[0].avg_rank, Some(1.0));
        assert_eq!((s[1].runs, s[1].mean, s[1].avg_rank), (0, None, None));
    }

    fn tiny_config() -> ExperimentConfig {
        ExperimentConfig {
            schemes: vec![ActivationScheme::combu()],
            model: ModelSize::Small,
            train: TrainConfig {
                epochs: 2,
                batch_size: 50,
                ..TrainConfig::paper()
            },
            repeats: 2,
            ..ExperimentConfig::new(DatasetSpec::Formula {
                formula: Formula::Ar,
                n: 200,
            })
        }
    }

    #[test]
    fn single_scheme_has_rank_one() {
        let report = run_experiment(&tiny_config(), 1).unwrap();
        assert_eq!(report.runs.len(), 2);
        for s in &report.summary {
            assert_eq!(s.avg_rank, Some(1.0));
        }
    }

    #[test]
    fn parallel_matches_serial() {
        let mut cfg = tiny_config();
        cfg.schemes
            .push(ActivationScheme::Uniform(ActivationKind::Relu));
        cfg.task = TaskSpec::Binned { n_bins: 3 };
        let serial = run_experiment(&cfg, 1).unwrap();
        let parallel = run_experiment(&cfg, 3).unwrap();
        assert_eq!(serial, parallel);
        assert_eq!(serial.task, Task::Classification { n_classes: 3 });
    }

    #[test]
    fn config_defaults_and_validation() {
        let cfg: ExperimentConfig =
            serde_json::from_str(r#"{"dataset":{"kind":"formula","formula":"gs","n":5000}}"#)
                .unwrap();
        assert_eq!(cfg.repeats, 5);
        assert_eq!(cfg.schemes.len(), 7);
        assert_eq!(cfg.model, ModelSize::Large);
        assert_eq!(cfg.train, TrainConfig::paper());
        let bad = ExperimentConfig {
            repeats: 0,
            ..cfg.clone()
        };
        assert!(bad.validate().is_err());
        let dup = ExperimentConfig {
            schemes: vec![ActivationScheme::combu(), ActivationScheme::combu()],
            ..cfg
        };
        assert!(dup.validate().is_err());
        assert!(serde_json::from_str::<ExperimentConfig>(
            r#"{"dataset":{"kind":"formula","formula":"gs","n":5},"bogus":1}"#
        )
        .is_err());
    }
}
