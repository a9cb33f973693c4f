//! Test metrics and rank aggregation.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{param_err, shape_err, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Mae,
    Mse,
    Accuracy,
    F1,
}

impl Metric {
    pub const REGRESSION: [Metric; 2] = [Metric::Mae, Metric::Mse];
    pub const CLASSIFICATION: [Metric; 2] = [Metric::Accuracy, Metric::F1];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Mae => "mae",
            Metric::Mse => "mse",
            Metric::Accuracy => "accuracy",
            Metric::F1 => "f1",
        }
    }

    pub fn higher_is_better(self) -> bool {
        matches!(self, Metric::Accuracy | Metric::F1)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Metric::Mae, Metric::Mse, Metric::Accuracy, Metric::F1]
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| param_err!("unknown metric '{s}'"))
    }
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b || a == 0 {
        Err(shape_err!("need equal non-empty lengths, got {a} and {b}"))
    } else {
        Ok(())
    }
}

pub fn mae(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_lengths(pred.len(), truth.len())?;
    Ok(pred
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - t).abs())
        .sum::<f64>()
        / pred.len() as f64)
}

pub fn mse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_lengths(pred.len(), truth.len())?;
    Ok(pred
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / pred.len() as f64)
}

pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    check_lengths(pred.len(), truth.len())?;
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / pred.len() as f64)
}

/// Macro-averaged F1. A class whose precision and recall are both zero scores 0.
pub fn macro_f1(pred: &[usize], truth: &[usize], n_classes: usize) -> Result<f64> {
    check_lengths(pred.len(), truth.len())?;
    if n_classes == 0 {
        return Err(param_err!("macro F1 needs at least one class"));
    }
    if let Some(c) = pred.iter().chain(truth).find(|&&c| c >= n_classes) {
        return Err(param_err!("class {c} out of range for {n_classes} classes"));
    }
    let mut tp = vec![0usize; n_classes];
    let mut predicted = vec![0usize; n_classes];
    let mut actual = vec![0usize; n_classes];
    for (&p, &t) in pred.iter().zip(truth) {
        predicted[p] += 1;
        actual[t] += 1;
        if p == t {
            tp[p] += 1;
        }
    }
    let total: f64 = (0..n_classes)
        .map(|c| {
            // F1 = 2TP / (predicted + actual), which is 0 when TP is 0.
            let denom = predicted[c] + actual[c];
            if tp[c] == 0 {
                0.0
            } else {
                2.0 * tp[c] as f64 / denom as f64
            }
        })
        .sum();
    Ok(total / n_classes as f64)
}

pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Mean and population standard deviation; `None` for no values.
pub fn aggregate(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ties {
    /// Tied entries share the mean of the ranks they span.
    #[default]
    Average,
    /// Tied entries all take the best rank they span.
    Min,
}

/// Ranks starting at 1 for the best value.
pub fn rank_values(values: &[f64], higher_is_better: bool, ties: Ties) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        let o = values[a].total_cmp(&values[b]);
        if higher_is_better {
            o.reverse()
        } else {
            o
        }
    });
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let rank = match ties {
            Ties::Average => (i + 1 + j) as f64 / 2.0,
            Ties::Min => (i + 1) as f64,
        };
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        i = j;
    }
    ranks
}
