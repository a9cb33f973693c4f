use serde::{Deserialize, Serialize};

use super::table::{ColumnData, TabularDataset, Task};
use crate::error::{param_err, Error, Result};
use crate::linalg::Matrix;
use crate::mlp::Targets;
use crate::rng::Rng;

pub const DEFAULT_BINS: usize = 5;

/// Equal-frequency class boundaries over `values`.
///
/// Edge `k` (1 ≤ k < bins) is the midpoint of the sorted values at positions
/// `m − 1` and `m`, with `m = ⌊k·n / bins⌋`.
pub fn quantile_edges(values: &[f64], n_bins: usize) -> Result<Vec<f64>> {
    if n_bins < 2 {
        return Err(param_err!("need at least 2 bins, got {n_bins}"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut distinct = sorted.clone();
    distinct.dedup();
    if distinct.len() < n_bins {
        return Err(param_err!(
            "{} distinct target values cannot fill {n_bins} bins",
            distinct.len()
        ));
    }
    let n = sorted.len();
    let edges: Vec<f64> = (1..n_bins)
        .map(|k| {
            let m = k * n / n_bins;
            0.5 * (sorted[m - 1] + sorted[m])
        })
        .collect();
    if edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(param_err!(
            "tied target values give non-increasing bin edges {edges:?}"
        ));
    }
    Ok(edges)
}

/// Class of `v`: the number of edges strictly below it, so bins are
/// right-closed and a value equal to an edge stays in the lower class.
pub fn bin_index(edges: &[f64], v: f64) -> usize {
    edges.partition_point(|&e| e < v)
}

/// Replaces a regression target by its equal-frequency bin index.
/// Returns the new dataset and the bin edges.
pub fn make_classification(
    ds: &TabularDataset,
    n_bins: usize,
) -> Result<(TabularDataset, Vec<f64>)> {
    if ds.task() != Task::Regression {
        return Err(param_err!("binning needs a regression target"));
    }
    let edges = quantile_edges(ds.target(), n_bins)?;
    let classes = ds
        .target()
        .iter()
        .map(|&v| bin_index(&edges, v) as f64)
        .collect();
    let out = ds.with_target(classes, Task::Classification { n_classes: n_bins })?;
    Ok((out, edges))
}

/// How one input column becomes model inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FeatureTransform {
    Scale {
        name: String,
        mean: f64,
        std: f64,
    },
    /// Constant on the train split; values pass through unscaled.
    Passthrough {
        name: String,
    },
    /// Categories seen in the train split; unseen values encode as all zeros.
    OneHot {
        name: String,
        categories: Vec<String>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetScaler {
    pub mean: f64,
    pub std: f64,
}

impl TargetScaler {
    pub fn apply(&self, v: f64) -> f64 {
        (v - self.mean) / self.std
    }

    pub fn invert(&self, v: f64) -> f64 {
        v * self.std + self.mean
    }
}

/// Statistics frozen from a train split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Preprocessor {
    pub features: Vec<FeatureTransform>,
    /// Present for regression targets with non-zero spread.
    pub target: Option<TargetScaler>,
    pub task: Task,
}

/// Mean and population standard deviation.
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl Preprocessor {
    pub fn fit(train: &TabularDataset) -> Result<Self> {
        if train.n_rows() == 0 {
            return Err(param_err!("cannot fit preprocessing on an empty split"));
        }
        let features = train
            .features()
            .iter()
            .map(|c| match &c.data {
                ColumnData::Numeric(v) => {
                    let (mean, std) = mean_std(v);
                    if std > 0.0 {
                        FeatureTransform::Scale {
                            name: c.name.clone(),
                            mean,
                            std,
                        }
                    } else {
                        FeatureTransform::Passthrough {
                            name: c.name.clone(),
                        }
                    }
                }
                ColumnData::Categorical(v) => {
                    let mut categories = v.clone();
                    categories.sort();
                    categories.dedup();
                    FeatureTransform::OneHot {
                        name: c.name.clone(),
                        categories,
                    }
                }
            })
            .collect();
        let target = match train.task() {
            Task::Regression => {
                let (mean, std) = mean_std(train.target());
                (std > 0.0).then_some(TargetScaler { mean, std })
            }
            Task::Classification { .. } => None,
        };
        Ok(Self {
            features,
            target,
            task: train.task(),
        })
    }

    /// Names of the model inputs, with `name=category` for one-hot columns.
    pub fn output_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        for t in &self.features {
            match t {
                FeatureTransform::Scale { name, .. } | FeatureTransform::Passthrough { name } => {
                    out.push(name.clone())
                }
                FeatureTransform::OneHot { name, categories } => {
                    out.extend(categories.iter().map(|c| format!("{name}={c}")))
                }
            }
        }
        out
    }

    pub fn output_dim(&self) -> usize {
        self.features
            .iter()
            .map(|t| match t {
                FeatureTransform::OneHot { categories, .. } => categories.len(),
                _ => 1,
            })
            .sum()
    }

    pub fn transform_features(&self, ds: &TabularDataset) -> Result<Matrix> {
        let n = ds.n_rows();
        let mut out = Matrix::zeros(n, self.output_dim());
        let mut offset = 0;
        for t in &self.features {
            let name = match t {
                FeatureTransform::Scale { name, .. }
                | FeatureTransform::Passthrough { name }
                | FeatureTransform::OneHot { name, .. } => name,
            };
            let col = ds
                .feature(name)
                .ok_or_else(|| Error::Schema(format!("missing feature column '{name}'")))?;
            match (t, &col.data) {
                (FeatureTransform::Scale { mean, std, .. }, ColumnData::Numeric(v)) => {
                    for (r, x) in v.iter().enumerate() {
                        out[(r, offset)] = (x - mean) / std;
                    }
                    offset += 1;
                }
                (FeatureTransform::Passthrough { .. }, ColumnData::Numeric(v)) => {
                    for (r, x) in v.iter().enumerate() {
                        out[(r, offset)] = *x;
                    }
                    offset += 1;
                }
                (FeatureTransform::OneHot { categories, .. }, ColumnData::Categorical(v)) => {
                    for (r, x) in v.iter().enumerate() {
                        if let Ok(i) = categories.binary_search(x) {
                            out[(r, offset + i)] = 1.0;
                        }
                    }
                    offset += categories.len();
                }
                _ => {
                    return Err(Error::Schema(format!(
                        "column '{name}' changed kind since fitting"
                    )))
                }
            }
        }
        Ok(out)
    }

    pub fn transform_targets(&self, ds: &TabularDataset) -> Result<Targets> {
        match (self.task, ds.task()) {
            (Task::Regression, Task::Regression) => {
                let t: Vec<f64> = ds
                    .target()
                    .iter()
                    .map(|&v| self.target.as_ref().map_or(v, |s| s.apply(v)))
                    .collect();
                Ok(Targets::Regression(Matrix::from_vec(t.len(), 1, t)?))
            }
            (Task::Classification { n_classes }, Task::Classification { .. }) => {
                Ok(Targets::Classes {
                    labels: ds.classes().unwrap_or_default(),
                    n_classes,
                })
            }
            _ => Err(Error::Schema(
                "dataset task differs from the fitted task".into(),
            )),
        }
    }
}

/// Random row split (test rows = round(n·test_fraction)) with preprocessing
/// fitted on the train rows only. Rows keep their original order within each split.
pub fn split_and_fit(
    ds: &TabularDataset,
    test_fraction: f64,
    rng: &mut Rng,
) -> Result<(TabularDataset, TabularDataset, Preprocessor)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(param_err!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        ));
    }
    let n = ds.n_rows();
    let n_test = (n as f64 * test_fraction).round() as usize;
    if n_test == 0 || n_test >= n {
        return Err(param_err!(
            "{n} rows with test fraction {test_fraction} leave an empty split"
        ));
    }
    let mut order: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut order);
    let (test_idx, train_idx) = order.split_at_mut(n_test);
    test_idx.sort_unstable();
    train_idx.sort_unstable();
    let train = ds.select_rows(train_idx);
    let test = ds.select_rows(test_idx);
    let pre = Preprocessor::fit(&train)?;
    Ok((train, test, pre))
}
