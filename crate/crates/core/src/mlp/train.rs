use serde::{Deserialize, Serialize};

use super::network::{Gradients, Head, LayeredNetwork, Mode};
use crate::error::{param_err, shape_err, Result};
use crate::linalg::Matrix;
use crate::rng::Rng;

/// Training targets, one row per sample.
#[derive(Clone, Debug, PartialEq)]
pub enum Targets {
    Regression(Matrix),
    Classes {
        labels: Vec<usize>,
        n_classes: usize,
    },
}

impl Targets {
    pub fn len(&self) -> usize {
        match self {
            Targets::Regression(m) => m.rows(),
            Targets::Classes { labels, .. } => labels.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn select(&self, rows: &[usize]) -> Targets {
        match self {
            Targets::Regression(m) => Targets::Regression(m.select_rows(rows)),
            Targets::Classes { labels, n_classes } => Targets::Classes {
                labels: rows.iter().map(|&r| labels[r]).collect(),
                n_classes: *n_classes,
            },
        }
    }
}

/// Mean squared error over all entries.
pub fn mse(output: &[f64], target: &[f64]) -> Result<f64> {
    if output.len() != target.len() || output.is_empty() {
        return Err(shape_err!(
            "mse needs equal non-empty lengths, got {} and {}",
            output.len(),
            target.len()
        ));
    }
    let sum: f64 = output
        .iter()
        .zip(target)
        .map(|(o, t)| (o - t) * (o - t))
        .sum();
    Ok(sum / output.len() as f64)
}

pub fn mse_grad(output: &[f64], target: &[f64]) -> Result<Vec<f64>> {
    if output.len() != target.len() || output.is_empty() {
        return Err(shape_err!("mse needs equal non-empty lengths"));
    }
    let scale = 2.0 / output.len() as f64;
    Ok(output
        .iter()
        .zip(target)
        .map(|(o, t)| scale * (o - t))
        .collect())
}

/// Negative log-probability of `class`. Zero probabilities give `+inf`.
pub fn cross_entropy(probs: &[f64], class: usize) -> Result<f64> {
    match probs.get(class) {
        Some(p) => Ok(-p.ln()),
        None => Err(param_err!(
            "class {class} out of range for {} classes",
            probs.len()
        )),
    }
}

/// Gradient of cross-entropy with respect to the softmax logits.
pub fn cross_entropy_grad(probs: &[f64], class: usize) -> Result<Vec<f64>> {
    if class >= probs.len() {
        return Err(param_err!(
            "class {class} out of range for {} classes",
            probs.len()
        ));
    }
    let mut g = probs.to_vec();
    g[class] -= 1.0;
    Ok(g)
}

/// Batch loss paired with a network head: MSE for identity, cross-entropy for softmax.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Loss {
    Mse,
    CrossEntropy,
}

impl Loss {
    pub fn for_head(head: Head) -> Loss {
        match head {
            Head::Identity => Loss::Mse,
            Head::Softmax => Loss::CrossEntropy,
        }
    }

    /// Mean loss over the batch plus its gradient with respect to the logits.
    pub fn value_and_grad(&self, output: &Matrix, targets: &Targets) -> Result<(f64, Matrix)> {
        let n = output.rows();
        if targets.len() != n || n == 0 {
            return Err(shape_err!("{} outputs but {} targets", n, targets.len()));
        }
        let mut grad = Matrix::zeros(n, output.cols());
        let mut total = 0.0;
        match (self, targets) {
            (Loss::Mse, Targets::Regression(t)) => {
                if t.cols() != output.cols() {
                    return Err(shape_err!(
                        "{} outputs per row but {} target columns",
                        output.cols(),
                        t.cols()
                    ));
                }
                for r in 0..n {
                    total += mse(output.row(r), t.row(r))?;
                    let g = mse_grad(output.row(r), t.row(r))?;
                    grad.row_mut(r).copy_from_slice(&g);
                }
            }
            (Loss::CrossEntropy, Targets::Classes { labels, .. }) => {
                for (r, &class) in labels.iter().enumerate() {
                    total += cross_entropy(output.row(r), class)?;
                    let g = cross_entropy_grad(output.row(r), class)?;
                    grad.row_mut(r).copy_from_slice(&g);
                }
            }
            _ => return Err(param_err!("loss {self:?} does not match the target kind")),
        }
        let inv = 1.0 / n as f64;
        grad.as_mut_slice().iter_mut().for_each(|g| *g *= inv);
        Ok((total * inv, grad))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One bias-corrected Adam update. `t` counts steps from 1.
pub fn adam_step(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    t: u64,
    cfg: &AdamConfig,
) {
    debug_assert!(t >= 1);
    let bc1 = 1.0 - cfg.beta1.powf(t as f64);
    let bc2 = 1.0 - cfg.beta2.powf(t as f64);
    for (((p, g), m), v) in params
        .iter_mut()
        .zip(grads)
        .zip(m.iter_mut())
        .zip(v.iter_mut())
    {
        *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
        *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *p -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.eps);
    }
}

/// Adam moments for every parameter block of a network.
#[derive(Clone, Debug)]
pub struct Adam {
    cfg: AdamConfig,
    t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(net: &mut LayeredNetwork, cfg: AdamConfig) -> Self {
        let sizes: Vec<usize> = net.parameters_mut().iter().map(|p| p.len()).collect();
        Self {
            cfg,
            t: 0,
            m: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            v: sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn step(&mut self, net: &mut LayeredNetwork, grads: &Gradients) {
        self.t += 1;
        let blocks = grads
            .layers
            .iter()
            .flat_map(|g| [g.weights.as_slice(), g.bias.as_slice()]);
        for (((params, g), m), v) in net
            .parameters_mut()
            .into_iter()
            .zip(blocks)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            adam_step(params, g, m, v, self.t, &self.cfg);
        }
    }
}

fn default_batch_size() -> usize {
    500
}
fn default_learning_rate() -> f64 {
    5e-4
}
fn default_epochs() -> usize {
    200
}
fn default_dropout() -> f64 {
    0.1
}
fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_eps() -> f64 {
    1e-8
}

/// Mini-batch Adam settings. Missing JSON fields take the paper setup.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_dropout")]
    pub dropout_rate: f64,
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::paper()
    }
}

impl TrainConfig {
    /// Batch 500, learning rate 5e-4, 200 epochs, dropout 0.1.
    pub fn paper() -> Self {
        Self {
            batch_size: default_batch_size(),
            learning_rate: default_learning_rate(),
            epochs: default_epochs(),
            dropout_rate: default_dropout(),
            beta1: default_beta1(),
            beta2: default_beta2(),
            eps: default_eps(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(param_err!("batch_size must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(param_err!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            ));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(param_err!(
                "dropout_rate must lie in [0, 1), got {}",
                self.dropout_rate
            ));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(param_err!("{name} must lie in [0, 1), got {b}"));
            }
        }
        if !(self.eps > 0.0) {
            return Err(param_err!("eps must be positive, got {}", self.eps));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean training loss of each completed epoch.
    pub epoch_losses: Vec<f64>,
    /// Set when a non-finite loss stopped training early.
    pub diverged: bool,
}

/// Trains with a stream derived from `cfg.seed`.
pub fn train(
    net: &mut LayeredNetwork,
    x: &Matrix,
    y: &Targets,
    cfg: &TrainConfig,
) -> Result<TrainReport> {
    train_with_rng(net, x, y, cfg, &mut Rng::new(cfg.seed))
}

/// Shuffled mini-batch training; `rng` drives both the shuffles and dropout.
pub fn train_with_rng(
    net: &mut LayeredNetwork,
    x: &Matrix,
    y: &Targets,
    cfg: &TrainConfig,
    rng: &mut Rng,
) -> Result<TrainReport> {
    cfg.validate()?;
    if x.rows() == 0 {
        return Err(param_err!("cannot train on an empty dataset"));
    }
    if y.len() != x.rows() {
        return Err(shape_err!(
            "{} feature rows but {} targets",
            x.rows(),
            y.len()
        ));
    }
    let loss = Loss::for_head(net.head());
    let mut adam = Adam::new(net, cfg.adam());
    let mut order: Vec<usize> = (0..x.rows()).collect();
    let mut report = TrainReport {
        epoch_losses: Vec::with_capacity(cfg.epochs),
        diverged: false,
    };
    for _ in 0..cfg.epochs {
        rng.shuffle(&mut order);
        let mut weighted = 0.0;
        for rows in order.chunks(cfg.batch_size) {
            let xb = x.select_rows(rows);
            let yb = y.select(rows);
            let (out, tape) = net.forward_batch(
                &xb,
                Mode::Train {
                    dropout: cfg.dropout_rate,
                    rng,
                },
            )?;
            let (value, d_logits) = loss.value_and_grad(&out, &yb)?;
            if !value.is_finite() {
                report.diverged = true;
                return Ok(report);
            }
            let grads = net.backward(&tape, &d_logits)?;
            adam.step(net, &grads);
            weighted += value * rows.len() as f64;
        }
        report.epoch_losses.push(weighted / x.rows() as f64);
    }
    if net.layers().iter().any(|l| !l.weights.is_finite()) {
        report.diverged = true;
    }
    Ok(report)
}
