use serde::{Deserialize, Serialize};

use crate::error::{param_err, shape_err, Error, Result};
use crate::linalg::Matrix;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnData {
    Numeric(Vec<f64>),
    /// Kept as strings until one-hot encoding.
    Categorical(Vec<String>),
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Numeric(v) => v.len(),
            ColumnData::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn select(&self, rows: &[usize]) -> ColumnData {
        match self {
            ColumnData::Numeric(v) => ColumnData::Numeric(rows.iter().map(|&r| v[r]).collect()),
            ColumnData::Categorical(v) => {
                ColumnData::Categorical(rows.iter().map(|&r| v[r].clone()).collect())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub data: ColumnData,
}

impl Column {
    pub fn numeric(name: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            data: ColumnData::Numeric(values),
        }
    }

    pub fn categorical(name: impl Into<String>, values: Vec<String>) -> Self {
        Self {
            name: name.into(),
            data: ColumnData::Categorical(values),
        }
    }

    pub fn as_numeric(&self) -> Option<&[f64]> {
        match &self.data {
            ColumnData::Numeric(v) => Some(v),
            ColumnData::Categorical(_) => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Task {
    Regression,
    Classification { n_classes: usize },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    /// Generator name, or `csv` for ingested files.
    pub source: String,
    pub seed: Option<u64>,
}

/// Column-oriented table: features, one target, and optional latent columns
/// recording generator parameters that are not model inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabularDataset {
    features: Vec<Column>,
    target_name: String,
    target: Vec<f64>,
    task: Task,
    latent: Vec<Column>,
    provenance: Provenance,
}

impl TabularDataset {
    pub fn new(
        features: Vec<Column>,
        target_name: impl Into<String>,
        target: Vec<f64>,
        task: Task,
        provenance: Provenance,
    ) -> Result<Self> {
        Self::with_latent(features, target_name, target, task, vec![], provenance)
    }

    pub fn with_latent(
        features: Vec<Column>,
        target_name: impl Into<String>,
        target: Vec<f64>,
        task: Task,
        latent: Vec<Column>,
        provenance: Provenance,
    ) -> Result<Self> {
        let target_name = target_name.into();
        let n = target.len();
        let mut names = std::collections::HashSet::new();
        names.insert(target_name.as_str());
        for c in features.iter().chain(&latent) {
            if c.data.len() != n {
                return Err(shape_err!(
                    "column '{}' has {} rows, target has {n}",
                    c.name,
                    c.data.len()
                ));
            }
            if !names.insert(c.name.as_str()) {
                return Err(Error::Schema(format!("duplicate column name '{}'", c.name)));
            }
            if let Some(v) = c.as_numeric() {
                if let Some(i) = v.iter().position(|x| !x.is_finite()) {
                    return Err(Error::Domain(format!(
                        "column '{}' row {i} is not finite",
                        c.name
                    )));
                }
            }
        }
        if let Some(i) = target.iter().position(|x| !x.is_finite()) {
            return Err(Error::Domain(format!("target row {i} is not finite")));
        }
        if let Task::Classification { n_classes } = task {
            if n_classes < 2 {
                return Err(param_err!("classification needs at least 2 classes"));
            }
            if let Some(i) = target
                .iter()
                .position(|&t| t < 0.0 || t.fract() != 0.0 || t >= n_classes as f64)
            {
                return Err(param_err!(
                    "target row {i} = {} is not a class index below {n_classes}",
                    target[i]
                ));
            }
        }
        Ok(Self {
            features,
            target_name,
            target,
            task,
            latent,
            provenance,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.target.len()
    }

    pub fn features(&self) -> &[Column] {
        &self.features
    }

    pub fn feature_names(&self) -> Vec<&str> {
        self.features.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn feature(&self, name: &str) -> Option<&Column> {
        self.features.iter().find(|c| c.name == name)
    }

    pub fn latent(&self, name: &str) -> Option<&Column> {
        self.latent.iter().find(|c| c.name == name)
    }

    pub fn latent_columns(&self) -> &[Column] {
        &self.latent
    }

    pub fn target_name(&self) -> &str {
        &self.target_name
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    /// Targets as class indices; `None` for regression.
    pub fn classes(&self) -> Option<Vec<usize>> {
        match self.task {
            Task::Classification { .. } => Some(self.target.iter().map(|&t| t as usize).collect()),
            Task::Regression => None,
        }
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn select_rows(&self, rows: &[usize]) -> TabularDataset {
        let pick = |cols: &[Column]| {
            cols.iter()
                .map(|c| Column {
                    name: c.name.clone(),
                    data: c.data.select(rows),
                })
                .collect()
        };
        TabularDataset {
            features: pick(&self.features),
            target_name: self.target_name.clone(),
            target: rows.iter().map(|&r| self.target[r]).collect(),
            task: self.task,
            latent: pick(&self.latent),
            provenance: self.provenance.clone(),
        }
    }

    /// Same features, new target and task.
    pub fn with_target(&self, target: Vec<f64>, task: Task) -> Result<TabularDataset> {
        Self::with_latent(
            self.features.clone(),
            self.target_name.clone(),
            target,
            task,
            self.latent.clone(),
            self.provenance.clone(),
        )
    }

    /// Raw numeric features as an `n × d` matrix. Fails on categorical columns.
    pub fn feature_matrix(&self) -> Result<Matrix> {
        let d = self.features.len();
        let cols = self
            .features
            .iter()
            .map(|c| {
                c.as_numeric()
                    .ok_or_else(|| Error::Schema(format!("column '{}' is categorical", c.name)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Matrix::from_fn(self.n_rows(), d, |r, c| cols[c][r]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> TabularDataset {
        TabularDataset::new(
            vec![
                Column::numeric("a", vec![1.0, 2.0, 3.0]),
                Column::categorical("c", vec!["x".into(), "y".into(), "x".into()]),
            ],
            "t",
            vec![0.5, 1.5, 2.5],
            Task::Regression,
            Provenance::default(),
        )
        .unwrap()
    }

    #[test]
    fn selection_and_queries() {
        let ds = tiny();
        assert_eq!(ds.n_rows(), 3);
        assert_eq!(ds.feature_names(), vec!["a", "c"]);
        let sub = ds.select_rows(&[2, 0]);
        assert_eq!(sub.target(), &[2.5, 0.5]);
        assert_eq!(sub.feature("a").unwrap().as_numeric().unwrap(), &[3.0, 1.0]);
        assert!(ds.feature_matrix().is_err());
    }

    #[test]
    fn invariants_are_checked() {
        let bad_len = TabularDataset::new(
            vec![Column::numeric("a", vec![1.0])],
            "t",
            vec![0.0, 1.0],
            Task::Regression,
            Provenance::default(),
        );
        assert!(bad_len.is_err());
        let nan = TabularDataset::new(
            vec![Column::numeric("a", vec![f64::NAN])],
            "t",
            vec![0.0],
            Task::Regression,
            Provenance::default(),
        );
        assert!(nan.is_err());
        let ds = tiny();
        assert!(ds
            .with_target(vec![0.0, 1.0, 2.0], Task::Classification { n_classes: 2 })
            .is_err());
        assert!(ds
            .with_target(vec![0.0, 1.5, 1.0], Task::Classification { n_classes: 2 })
            .is_err());
        let dup = TabularDataset::new(
            vec![Column::numeric("t", vec![1.0])],
            "t",
            vec![0.0],
            Task::Regression,
            Provenance::default(),
        );
        assert!(dup.is_err());
    }
}
