use serde::{Deserialize, Serialize};

use crate::activation::ActivationKind;
use crate::combu::CombUSpec;
use crate::error::{param_err, shape_err, Error, Result};
use crate::linalg::{gemm, Matrix, View};
use crate::rng::Rng;

/// How the dimensions of one hidden layer are activated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerActivation {
    Uniform(ActivationKind),
    Combu(CombUSpec),
    /// Explicit per-dimension kinds, as produced by the expression compiler.
    PerDim(Vec<ActivationKind>),
}

impl LayerActivation {
    /// The width this activation is tied to, if any.
    pub fn width(&self) -> Option<usize> {
        match self {
            LayerActivation::Uniform(_) => None,
            LayerActivation::Combu(spec) => Some(spec.dim()),
            LayerActivation::PerDim(kinds) => Some(kinds.len()),
        }
    }

    pub fn kind_at(&self, d: usize) -> ActivationKind {
        match self {
            LayerActivation::Uniform(k) => *k,
            LayerActivation::Combu(spec) => spec.assignment()[d],
            LayerActivation::PerDim(kinds) => kinds[d],
        }
    }

    pub fn kinds(&self, width: usize) -> Vec<ActivationKind> {
        (0..width).map(|d| self.kind_at(d)).collect()
    }

    /// Columns grouped by kind, first-seen order.
    fn groups(&self, width: usize) -> Vec<(ActivationKind, Vec<usize>)> {
        if let LayerActivation::Uniform(k) = self {
            return vec![(*k, (0..width).collect())];
        }
        let mut groups: Vec<(ActivationKind, Vec<usize>)> = Vec::new();
        for d in 0..width {
            let kind = self.kind_at(d);
            match groups.iter_mut().find(|(k, _)| *k == kind) {
                Some((_, cols)) => cols.push(d),
                None => groups.push((kind, vec![d])),
            }
        }
        groups
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    /// `out × in`, row-major.
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub activation: Option<LayerActivation>,
}

impl DenseLayer {
    pub fn new(weights: Matrix, bias: Vec<f64>, activation: Option<LayerActivation>) -> Self {
        Self {
            weights,
            bias,
            activation,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.rows()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Head {
    Identity,
    Softmax,
}

/// Dense layers chained by width. Every layer but the last carries an
/// activation; the last is a bare affine map followed by the task head.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawNetwork")]
pub struct LayeredNetwork {
    input_dim: usize,
    layers: Vec<DenseLayer>,
    head: Head,
}

#[derive(Deserialize)]
struct RawNetwork {
    input_dim: usize,
    layers: Vec<DenseLayer>,
    head: Head,
}

impl TryFrom<RawNetwork> for LayeredNetwork {
    type Error = Error;

    fn try_from(raw: RawNetwork) -> Result<Self> {
        LayeredNetwork::new(raw.input_dim, raw.layers, raw.head)
    }
}

/// Whether a forward pass applies dropout.
pub enum Mode<'a> {
    Eval,
    Train { dropout: f64, rng: &'a mut Rng },
}

/// Intermediate values of a forward pass, consumed by [`LayeredNetwork::backward`].
#[derive(Debug)]
pub struct Tape {
    /// Input to each layer (after dropout for hidden layers).
    inputs: Vec<Matrix>,
    /// Pre-activation of each hidden layer.
    pre: Vec<Matrix>,
    /// Activation output of each hidden layer, before dropout.
    post: Vec<Matrix>,
    /// Inverted-dropout multipliers per hidden layer.
    masks: Vec<Option<Vec<f64>>>,
    logits: Matrix,
}

impl Tape {
    pub fn logits(&self) -> &Matrix {
        &self.logits
    }

    /// Pre-activations of hidden layer `l`.
    pub fn pre_activation(&self, l: usize) -> &Matrix {
        &self.pre[l]
    }
}

#[derive(Clone, Debug)]
pub struct LayerGrad {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct Gradients {
    pub layers: Vec<LayerGrad>,
}

impl LayeredNetwork {
    pub fn new(input_dim: usize, layers: Vec<DenseLayer>, head: Head) -> Result<Self> {
        if input_dim == 0 {
            return Err(param_err!("network input must have at least one dimension"));
        }
        if layers.is_empty() {
            return Err(param_err!("network needs at least one layer"));
        }
        let mut width = input_dim;
        let last = layers.len() - 1;
        for (l, layer) in layers.iter().enumerate() {
            if layer.in_dim() != width {
                return Err(shape_err!(
                    "layer {l} expects {} inputs but receives {width}",
                    layer.in_dim()
                ));
            }
            if layer.bias.len() != layer.out_dim() {
                return Err(shape_err!(
                    "layer {l} has {} outputs but {} biases",
                    layer.out_dim(),
                    layer.bias.len()
                ));
            }
            match (&layer.activation, l == last) {
                (Some(_), true) => {
                    return Err(param_err!("the final layer cannot have an activation"))
                }
                (None, false) => return Err(param_err!("hidden layer {l} has no activation")),
                (Some(act), false) => {
                    if let Some(w) = act.width() {
                        if w != layer.out_dim() {
                            return Err(shape_err!(
                                "layer {l} activation covers {w} dims, layer has {}",
                                layer.out_dim()
                            ));
                        }
                    }
                }
                (None, true) => {}
            }
            width = layer.out_dim();
        }
        Ok(Self {
            input_dim,
            layers,
            head,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, DenseLayer::out_dim)
    }

    pub fn head(&self) -> Head {
        self.head
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn into_layers(self) -> Vec<DenseLayer> {
        self.layers
    }

    /// Number of dense layers.
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// Layer widths from the input to the output, e.g. `[9, 128, 128, 1]`.
    pub fn dims(&self) -> Vec<usize> {
        std::iter::once(self.input_dim)
            .chain(self.layers.iter().map(DenseLayer::out_dim))
            .collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.as_slice().len() + l.bias.len())
            .sum()
    }

    /// Mutable access to every parameter block: weights then bias, per layer.
    pub fn parameters_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(self.layers.len() * 2);
        for layer in &mut self.layers {
            out.push(layer.weights.as_mut_slice());
            out.push(layer.bias.as_mut_slice());
        }
        out
    }

    pub fn forward(&self, x: &[f64], mode: Mode<'_>) -> Result<(Vec<f64>, Tape)> {
        let batch = Matrix::from_vec(1, x.len(), x.to_vec())?;
        let (out, tape) = self.forward_batch(&batch, mode)?;
        Ok((out.into_vec(), tape))
    }

    /// Eval-mode forward pass of one sample, head applied.
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.forward(x, Mode::Eval).map(|(y, _)| y)
    }

    pub fn predict_batch(&self, x: &Matrix) -> Result<Matrix> {
        self.forward_batch(x, Mode::Eval).map(|(y, _)| y)
    }

    /// Forward pass over the rows of `x`. Returns head outputs and the tape.
    pub fn forward_batch(&self, x: &Matrix, mode: Mode<'_>) -> Result<(Matrix, Tape)> {
        if x.cols() != self.input_dim {
            return Err(shape_err!(
                "network takes {} inputs, got {}",
                self.input_dim,
                x.cols()
            ));
        }
        let (dropout, mut rng) = match mode {
            Mode::Eval => (0.0, None),
            Mode::Train { dropout, rng } => {
                if !(0.0..1.0).contains(&dropout) {
                    return Err(param_err!("dropout rate {dropout} outside [0, 1)"));
                }
                (dropout, Some(rng))
            }
        };
        let n_hidden = self.layers.len() - 1;
        let mut tape = Tape {
            inputs: Vec::with_capacity(self.layers.len()),
            pre: Vec::with_capacity(n_hidden),
            post: Vec::with_capacity(n_hidden),
            masks: Vec::with_capacity(n_hidden),
            logits: Matrix::zeros(0, 0),
        };
        let mut current = x.clone();
        for layer in &self.layers {
            let z = affine_rows(&current, layer);
            tape.inputs.push(current);
            match &layer.activation {
                None => {
                    tape.logits = z;
                    break;
                }
                Some(act) => {
                    let post = activate(act, &z);
                    let mut next = post.clone();
                    let mask = match rng.as_deref_mut() {
                        Some(rng) if dropout > 0.0 => {
                            let keep = 1.0 / (1.0 - dropout);
                            let mask: Vec<f64> = (0..next.as_slice().len())
                                .map(|_| if rng.uniform() < dropout { 0.0 } else { keep })
                                .collect();
                            for (v, m) in next.as_mut_slice().iter_mut().zip(&mask) {
                                *v *= m;
                            }
                            Some(mask)
                        }
                        _ => None,
                    };
                    tape.pre.push(z);
                    tape.post.push(post);
                    tape.masks.push(mask);
                    current = next;
                }
            }
        }
        let out = apply_head(self.head, &tape.logits);
        Ok((out, tape))
    }

    /// Gradients of a loss given its derivative with respect to the logits.
    pub fn backward(&self, tape: &Tape, d_logits: &Matrix) -> Result<Gradients> {
        if d_logits.shape() != tape.logits.shape() {
            return Err(shape_err!(
                "logit gradient is {:?}, logits are {:?}",
                d_logits.shape(),
                tape.logits.shape()
            ));
        }
        let mut grads: Vec<LayerGrad> = Vec::with_capacity(self.layers.len());
        let mut delta = d_logits.clone();
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let input = &tape.inputs[l];
            let mut dw = Matrix::zeros(layer.out_dim(), layer.in_dim());
            gemm(1.0, View::of(&delta).t(), View::of(input), 0.0, &mut dw);
            let mut db = vec![0.0; layer.out_dim()];
            for r in 0..delta.rows() {
                for (acc, v) in db.iter_mut().zip(delta.row(r)) {
                    *acc += v;
                }
            }
            grads.push(LayerGrad {
                weights: dw,
                bias: db,
            });
            if l == 0 {
                break;
            }
            let mut d_input = Matrix::zeros(delta.rows(), layer.in_dim());
            gemm(
                1.0,
                View::of(&delta),
                View::of(&layer.weights),
                0.0,
                &mut d_input,
            );
            let below = l - 1;
            let act = self.layers[below]
                .activation
                .as_ref()
                .ok_or_else(|| Error::Internal("hidden layer without activation".into()))?;
            if let Some(mask) = &tape.masks[below] {
                for (v, m) in d_input.as_mut_slice().iter_mut().zip(mask) {
                    *v *= m;
                }
            }
            scale_by_activation_grad(act, &tape.pre[below], &tape.post[below], &mut d_input);
            delta = d_input;
        }
        grads.reverse();
        Ok(Gradients { layers: grads })
    }
}

fn affine_rows(x: &Matrix, layer: &DenseLayer) -> Matrix {
    let mut z = Matrix::zeros(x.rows(), layer.out_dim());
    gemm(1.0, View::of(x), View::of(&layer.weights).t(), 0.0, &mut z);
    for r in 0..z.rows() {
        for (v, b) in z.row_mut(r).iter_mut().zip(&layer.bias) {
            *v += b;
        }
    }
    z
}

fn activate(act: &LayerActivation, pre: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(pre.rows(), pre.cols());
    for (kind, cols) in act.groups(pre.cols()) {
        for r in 0..pre.rows() {
            let src = pre.row(r);
            let dst = out.row_mut(r);
            for &c in &cols {
                dst[c] = kind.eval(src[c]);
            }
        }
    }
    out
}

fn scale_by_activation_grad(
    act: &LayerActivation,
    pre: &Matrix,
    post: &Matrix,
    delta: &mut Matrix,
) {
    for (kind, cols) in act.groups(pre.cols()) {
        for r in 0..pre.rows() {
            let (x, y) = (pre.row(r), post.row(r));
            let d = delta.row_mut(r);
            for &c in &cols {
                d[c] *= kind.grad_with_output(x[c], y[c]);
            }
        }
    }
}

fn apply_head(head: Head, logits: &Matrix) -> Matrix {
    match head {
        Head::Identity => logits.clone(),
        Head::Softmax => {
            let mut out = logits.clone();
            for r in 0..out.rows() {
                softmax_in_place(out.row_mut(r));
            }
            out
        }
    }
}

pub fn softmax_in_place(v: &mut [f64]) {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in v.iter_mut() {
        *x /= sum;
    }
}
