//! Fixed-weight network fragments, each exact on its declared interval.

use crate::activation::ActivationKind;
use crate::error::{param_err, Error, Result};
use crate::linalg::Matrix;
use crate::mlp::{DenseLayer, Head, LayerActivation, LayeredNetwork};

/// Largest `M` whose `exp(M)` is comfortably finite in `f64`.
pub const MAX_EXP_BOUND: f64 = 700.0;

fn per_dim(kinds: Vec<ActivationKind>) -> Option<LayerActivation> {
    Some(LayerActivation::PerDim(kinds))
}

fn network(layers: Vec<DenseLayer>) -> LayeredNetwork {
    LayeredNetwork::new(layers[0].in_dim(), layers, Head::Identity)
        .expect("gadget layers chain by construction")
}

/// `exp(M)·E(x−M) − exp(M)·R(x−M) + exp(M)`: equal to `exp(x)` for `x ≤ M`,
/// saturating at `exp(M)` above.
pub fn exp_gadget(m: f64) -> Result<LayeredNetwork> {
    if !m.is_finite() || m > MAX_EXP_BOUND {
        return Err(Error::Conditioning(format!(
            "exp gadget bound M = {m} exceeds {MAX_EXP_BOUND}"
        )));
    }
    let scale = m.exp();
    Ok(network(vec![
        DenseLayer::new(
            Matrix::from_rows(&[[1.0], [1.0]])?,
            vec![-m, -m],
            per_dim(vec![ActivationKind::ELU, ActivationKind::Relu]),
        ),
        DenseLayer::new(Matrix::from_rows(&[[scale, -scale]])?, vec![scale], None),
    ]))
}

/// `N(x/δ − 1) + ln δ`: equal to `ln x` for `x ≥ δ`.
pub fn log_gadget(delta: f64) -> Result<LayeredNetwork> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(param_err!("log gadget needs δ > 0, got {delta}"));
    }
    Ok(network(vec![
        DenseLayer::new(
            Matrix::from_rows(&[[1.0 / delta]])?,
            vec![-1.0],
            per_dim(vec![ActivationKind::NLRELU]),
        ),
        DenseLayer::new(Matrix::from_rows(&[[1.0]])?, vec![delta.ln()], None),
    ]))
}

/// `R(z) − R(−z) = z` for every real `z`.
pub fn identity_gadget() -> LayeredNetwork {
    identity_chain(1)
}

/// `k` identity gadgets in sequence (`k + 1` dense layers). `k = 0` is the
/// bare linear identity.
pub fn identity_chain(k: usize) -> LayeredNetwork {
    let mut layers = Vec::with_capacity(k + 1);
    let relu = || per_dim(vec![ActivationKind::Relu; 2]);
    if k == 0 {
        layers.push(DenseLayer::new(Matrix::identity(1), vec![0.0], None));
    } else {
        layers.push(DenseLayer::new(
            Matrix::from_vec(2, 1, vec![1.0, -1.0]).expect("2x1"),
            vec![0.0; 2],
            relu(),
        ));
        for _ in 1..k {
            layers.push(DenseLayer::new(
                Matrix::from_vec(2, 2, vec![1.0, -1.0, -1.0, 1.0]).expect("2x2"),
                vec![0.0; 2],
                relu(),
            ));
        }
        layers.push(DenseLayer::new(
            Matrix::from_vec(1, 2, vec![1.0, -1.0]).expect("1x2"),
            vec![0.0],
            None,
        ));
    }
    network(layers)
}
