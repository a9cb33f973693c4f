//! Structural passes that combine networks without changing what they compute.

use crate::activation::ActivationKind;
use crate::error::{param_err, Error, Result};
use crate::linalg::Matrix;
use crate::mlp::{DenseLayer, Head, LayerActivation, LayeredNetwork};

fn internal(msg: impl Into<String>) -> Error {
    Error::Internal(msg.into())
}

/// Replaces an output layer computing `f` by one computing the pairs
/// `R(f_r), R(−f_r)`, interleaved.
fn split_pairs(layer: &DenseLayer) -> DenseLayer {
    let (k, n) = (layer.out_dim(), layer.in_dim());
    let mut w = Matrix::zeros(2 * k, n);
    let mut b = vec![0.0; 2 * k];
    for r in 0..k {
        for c in 0..n {
            w[(2 * r, c)] = layer.weights[(r, c)];
            w[(2 * r + 1, c)] = -layer.weights[(r, c)];
        }
        b[2 * r] = layer.bias[r];
        b[2 * r + 1] = -layer.bias[r];
    }
    DenseLayer::new(
        w,
        b,
        Some(LayerActivation::PerDim(vec![ActivationKind::Relu; 2 * k])),
    )
}

/// Weights reading `f_r = R(f_r) − R(−f_r)` back from interleaved pairs,
/// with `w` applied on top: column `2r` gets `w[·, r]`, column `2r+1` its negation.
fn read_pairs(w: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(w.rows(), 2 * w.cols());
    for i in 0..w.rows() {
        for r in 0..w.cols() {
            out[(i, 2 * r)] = w[(i, r)];
            out[(i, 2 * r + 1)] = -w[(i, r)];
        }
    }
    out
}

/// Appends identity gadgets until `net` has `depth` layers. Outputs are unchanged.
pub fn extend_depth(net: LayeredNetwork, depth: usize) -> Result<LayeredNetwork> {
    if net.depth() >= depth {
        return Ok(net);
    }
    let (input_dim, head) = (net.input_dim(), net.head());
    let mut layers = net.into_layers();
    while layers.len() < depth {
        let last = layers.pop().ok_or_else(|| internal("empty network"))?;
        let k = last.out_dim();
        layers.push(split_pairs(&last));
        layers.push(DenseLayer::new(
            read_pairs(&Matrix::identity(k)),
            vec![0.0; k],
            None,
        ));
    }
    LayeredNetwork::new(input_dim, layers, head)
}

/// Adds unused inputs (zero weights) so the network takes `input_dim` values;
/// existing inputs keep their positions.
pub fn widen_inputs(net: LayeredNetwork, input_dim: usize) -> Result<LayeredNetwork> {
    let old = net.input_dim();
    if input_dim < old {
        return Err(param_err!("cannot narrow inputs from {old} to {input_dim}"));
    }
    if input_dim == old {
        return Ok(net);
    }
    let head = net.head();
    let mut layers = net.into_layers();
    let first = &mut layers[0];
    let w = &first.weights;
    first.weights = Matrix::from_fn(
        w.rows(),
        input_dim,
        |r, c| if c < old { w[(r, c)] } else { 0.0 },
    );
    LayeredNetwork::new(input_dim, layers, head)
}

fn kinds(layer: &DenseLayer) -> Result<Vec<ActivationKind>> {
    layer
        .activation
        .as_ref()
        .map(|a| a.kinds(layer.out_dim()))
        .ok_or_else(|| internal("hidden layer without activation"))
}

/// Brings the networks to a common input width and depth, then lays them side
/// by side: shared inputs in the first layer, block-diagonal weights after it.
fn stack(nets: Vec<LayeredNetwork>) -> Result<Vec<DenseLayer>> {
    if nets.iter().any(|n| n.head() != Head::Identity) {
        return Err(param_err!(
            "only networks with an identity head can be combined"
        ));
    }
    let input_dim = nets
        .iter()
        .map(LayeredNetwork::input_dim)
        .max()
        .unwrap_or(0);
    let depth = nets.iter().map(LayeredNetwork::depth).max().unwrap_or(0);
    let nets = nets
        .into_iter()
        .map(|n| extend_depth(widen_inputs(n, input_dim)?, depth))
        .collect::<Result<Vec<_>>>()?;
    let mut layers = Vec::with_capacity(depth);
    for l in 0..depth {
        let parts: Vec<&DenseLayer> = nets.iter().map(|n| &n.layers()[l]).collect();
        if parts.iter().any(|p| p.in_dim() == 0) {
            return Err(internal("zero-width layer while stacking"));
        }
        let rows: usize = parts.iter().map(|p| p.out_dim()).sum();
        let cols: usize = if l == 0 {
            input_dim
        } else {
            parts.iter().map(|p| p.in_dim()).sum()
        };
        let mut w = Matrix::zeros(rows, cols);
        let mut b = Vec::with_capacity(rows);
        let mut acts = Vec::with_capacity(rows);
        let (mut r0, mut c0) = (0, 0);
        for p in &parts {
            for r in 0..p.out_dim() {
                for c in 0..p.in_dim() {
                    w[(r0 + r, c0 + c)] = p.weights[(r, c)];
                }
            }
            b.extend_from_slice(&p.bias);
            if l + 1 < depth {
                acts.extend(kinds(p)?);
            }
            r0 += p.out_dim();
            if l > 0 {
                c0 += p.in_dim();
            }
        }
        let activation = (l + 1 < depth).then_some(LayerActivation::PerDim(acts));
        layers.push(DenseLayer::new(w, b, activation));
    }
    Ok(layers)
}

/// Feeds the concatenated outputs of `inners` into `outer`.
///
/// Inners are widened to a common input, padded to a common depth `H` with
/// identity gadgets and placed side by side. Each inner output `f` is carried
/// as the pair `R(f), R(−f)`, which the outer's first layer reads back with
/// weights `θ, −θ`. The result has `H + depth(outer)` layers.
pub fn compose(outer: &LayeredNetwork, inners: Vec<LayeredNetwork>) -> Result<LayeredNetwork> {
    if inners.is_empty() {
        return Err(param_err!("compose needs at least one inner network"));
    }
    let width: usize = inners.iter().map(LayeredNetwork::output_dim).sum();
    if width != outer.input_dim() {
        return Err(param_err!(
            "outer network takes {} inputs but the inners produce {width}",
            outer.input_dim()
        ));
    }
    let mut layers = stack(inners)?;
    let input_dim = layers[0].in_dim();
    let last = layers.pop().ok_or_else(|| internal("empty stack"))?;
    layers.push(split_pairs(&last));
    let mut outer_layers = outer.layers().to_vec();
    let first = &mut outer_layers[0];
    first.weights = read_pairs(&first.weights);
    layers.extend(outer_layers);
    LayeredNetwork::new(input_dim, layers, outer.head())
}

/// `bias + Σ coeffs[k]·inners[k]`, merged into the inners' shared output layer.
pub fn linear_combination(
    coeffs: &[f64],
    inners: Vec<LayeredNetwork>,
    bias: f64,
) -> Result<LayeredNetwork> {
    if coeffs.len() != inners.len() || inners.is_empty() {
        return Err(param_err!(
            "need one coefficient per network and at least one network"
        ));
    }
    if inners.iter().any(|n| n.output_dim() != 1) {
        return Err(param_err!("linear combination takes scalar networks"));
    }
    let mut layers = stack(inners)?;
    let input_dim = layers[0].in_dim();
    let last = layers.pop().ok_or_else(|| internal("empty stack"))?;
    let mut w = Matrix::zeros(1, last.in_dim());
    let mut b = bias;
    for (r, c) in coeffs.iter().enumerate() {
        for (acc, v) in w.row_mut(0).iter_mut().zip(last.weights.row(r)) {
            *acc += c * v;
        }
        b += c * last.bias[r];
    }
    layers.push(DenseLayer::new(w, vec![b], None));
    LayeredNetwork::new(input_dim, layers, Head::Identity)
}
