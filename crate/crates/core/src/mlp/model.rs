use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::network::{DenseLayer, Head, LayerActivation, LayeredNetwork};
use crate::activation::ActivationKind;
use crate::combu::{CombUSpec, Ratios};
use crate::error::{param_err, Error, Result};
use crate::linalg::Matrix;
use crate::rng::Rng;

/// The activation applied to every hidden layer of a trained model.
#[derive(Clone, Debug, PartialEq)]
pub enum ActivationScheme {
    Uniform(ActivationKind),
    CombU(Ratios),
}

impl ActivationScheme {
    pub fn combu() -> Self {
        ActivationScheme::CombU(Ratios::default_mixture())
    }

    /// ReLU, ELU, SELU, Swish, NLReLU, GELU and the default CombU.
    pub fn table_schemes() -> Vec<ActivationScheme> {
        use ActivationKind as K;
        vec![
            ActivationScheme::Uniform(K::Relu),
            ActivationScheme::Uniform(K::ELU),
            ActivationScheme::Uniform(K::SELU),
            ActivationScheme::Uniform(K::SWISH),
            ActivationScheme::Uniform(K::NLRELU),
            ActivationScheme::Uniform(K::Gelu),
            ActivationScheme::combu(),
        ]
    }

    fn layer_activation(&self, width: usize, seed: u64) -> Result<LayerActivation> {
        Ok(match self {
            ActivationScheme::Uniform(k) => LayerActivation::Uniform(*k),
            ActivationScheme::CombU(r) => {
                LayerActivation::Combu(CombUSpec::new(r.clone(), width, seed)?)
            }
        })
    }
}

impl fmt::Display for ActivationScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ActivationScheme::Uniform(k) => write!(f, "{k}"),
            ActivationScheme::CombU(r) if *r == Ratios::default_mixture() => f.write_str("combu"),
            ActivationScheme::CombU(r) => write!(f, "combu[{r}]"),
        }
    }
}

impl FromStr for ActivationScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("combu") {
            Ok(ActivationScheme::combu())
        } else {
            s.parse().map(ActivationScheme::Uniform)
        }
    }
}

// A bare string names a kind or the default mixture; `{"combu": {...}}` gives custom ratios.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RawScheme {
    Name(String),
    Custom { combu: Ratios },
}

impl Serialize for ActivationScheme {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ActivationScheme::CombU(r) if *r != Ratios::default_mixture() => {
                RawScheme::Custom { combu: r.clone() }.serialize(s)
            }
            other => RawScheme::Name(other.to_string()).serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for ActivationScheme {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match RawScheme::deserialize(d)? {
            RawScheme::Name(name) => name.parse().map_err(serde::de::Error::custom),
            RawScheme::Custom { combu } => Ok(ActivationScheme::CombU(combu)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelSize {
    /// 3 dense layers, 128 hidden units.
    Small,
    /// 6 dense layers, 256 hidden units.
    Large,
}

impl ModelSize {
    pub fn hidden_widths(self) -> Vec<usize> {
        match self {
            ModelSize::Small => vec![128; 2],
            ModelSize::Large => vec![256; 5],
        }
    }
}

/// Dense network with the given hidden widths. Weights come from
/// `rng.child(0)`, CombU assignment seeds from `rng.child(1)`, so two schemes
/// built from the same `rng` start from identical weights.
pub fn build_mlp(
    input_dim: usize,
    hidden: &[usize],
    output_dim: usize,
    scheme: &ActivationScheme,
    head: Head,
    rng: &Rng,
) -> Result<LayeredNetwork> {
    if input_dim == 0 || output_dim == 0 || hidden.contains(&0) {
        return Err(param_err!("all layer widths must be at least 1"));
    }
    let mut weight_rng = rng.child(0);
    let mut assign_rng = rng.child(1);
    let dims: Vec<usize> = std::iter::once(input_dim)
        .chain(hidden.iter().copied())
        .chain(std::iter::once(output_dim))
        .collect();
    let mut layers = Vec::with_capacity(dims.len() - 1);
    for (l, pair) in dims.windows(2).enumerate() {
        let (fan_in, fan_out) = (pair[0], pair[1]);
        let s = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let weights = Matrix::from_fn(fan_out, fan_in, |_, _| weight_rng.uniform_in(-s, s));
        let seed = assign_rng.next_u64();
        let activation = if l + 1 < dims.len() - 1 {
            Some(scheme.layer_activation(fan_out, seed)?)
        } else {
            None
        };
        layers.push(DenseLayer::new(weights, vec![0.0; fan_out], activation));
    }
    LayeredNetwork::new(input_dim, layers, head)
}

pub fn build_paper_mlp(
    input_dim: usize,
    output_dim: usize,
    size: ModelSize,
    scheme: &ActivationScheme,
    head: Head,
    rng: &Rng,
) -> Result<LayeredNetwork> {
    build_mlp(
        input_dim,
        &size.hidden_widths(),
        output_dim,
        scheme,
        head,
        rng,
    )
}
