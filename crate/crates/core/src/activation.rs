//! Scalar activation functions with analytic derivatives.
//!
//! At kinks (x = 0 for ReLU, leaky ReLU, ELU and NLReLU) the derivative is
//! the right-hand one.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{param_err, Error, Result};

pub const SELU_LAMBDA: f64 = 1.050_700_987_355_480_5;
pub const SELU_ALPHA: f64 = 1.673_263_242_354_377_2;
pub const LRELU_SLOPE: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ActivationKind {
    Sigmoid,
    Relu,
    SoftPlus,
    Tanh,
    LeakyRelu { slope: f64 },
    Elu { alpha: f64 },
    Selu { lambda: f64, alpha: f64 },
    Swish { beta: f64 },
    NlRelu { beta: f64 },
    Gelu,
}

use ActivationKind::*;

impl ActivationKind {
    pub const ELU: ActivationKind = Elu { alpha: 1.0 };
    pub const NLRELU: ActivationKind = NlRelu { beta: 1.0 };
    pub const SELU: ActivationKind = Selu {
        lambda: SELU_LAMBDA,
        alpha: SELU_ALPHA,
    };
    pub const SWISH: ActivationKind = Swish { beta: 1.0 };
    pub const LRELU: ActivationKind = LeakyRelu { slope: LRELU_SLOPE };

    /// Every kind with its default hyperparameters.
    pub const ALL: [ActivationKind; 10] = [
        Sigmoid,
        Relu,
        SoftPlus,
        Tanh,
        Self::LRELU,
        Self::ELU,
        Self::SELU,
        Self::SWISH,
        Self::NLRELU,
        Gelu,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Sigmoid => "sigmoid",
            Relu => "relu",
            SoftPlus => "softplus",
            Tanh => "tanh",
            LeakyRelu { .. } => "lrelu",
            Elu { .. } => "elu",
            Selu { .. } => "selu",
            Swish { .. } => "swish",
            NlRelu { .. } => "nlrelu",
            Gelu => "gelu",
        }
    }

    fn params(&self) -> Vec<f64> {
        match *self {
            LeakyRelu { slope } => vec![slope],
            Elu { alpha } => vec![alpha],
            Selu { lambda, alpha } => vec![lambda, alpha],
            Swish { beta } | NlRelu { beta } => vec![beta],
            _ => Vec::new(),
        }
    }

    fn with_default_params(name: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|k| k.name() == name)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            LeakyRelu { slope } => (0.0..=1.0).contains(&slope),
            Elu { alpha } => (0.0..=1.0).contains(&alpha),
            Selu { lambda, alpha } => lambda > 1.0 && alpha > 0.0 && alpha.is_finite(),
            Swish { beta } => beta >= 0.0 && beta.is_finite(),
            NlRelu { beta } => beta > 0.0 && beta.is_finite(),
            _ => true,
        };
        if ok {
            Ok(())
        } else {
            Err(param_err!("{self} has parameters outside the valid range"))
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Sigmoid => sigmoid(x),
            Relu => {
                if x > 0.0 {
                    x
                } else {
                    0.0
                }
            }
            SoftPlus => x.max(0.0) + (-x.abs()).exp().ln_1p(),
            Tanh => x.tanh(),
            LeakyRelu { slope } => {
                if x >= 0.0 {
                    x
                } else {
                    slope * x
                }
            }
            Elu { alpha } => elu(alpha, x),
            Selu { lambda, alpha } => lambda * elu(alpha, x),
            Swish { beta } => x * sigmoid(beta * x),
            NlRelu { beta } => {
                if x > 0.0 {
                    (beta * x).ln_1p()
                } else {
                    0.0
                }
            }
            Gelu => x * std_normal_cdf(x),
        }
    }

    pub fn grad(&self, x: f64) -> f64 {
        self.grad_with_output(x, self.eval(x))
    }

    /// Derivative at `x` given `y = self.eval(x)`, reusing `y` where the
    /// closed form allows it.
    pub fn grad_with_output(&self, x: f64, y: f64) -> f64 {
        match *self {
            Sigmoid => y * (1.0 - y),
            Relu => {
                if x >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            SoftPlus => sigmoid(x),
            Tanh => 1.0 - y * y,
            LeakyRelu { slope } => {
                if x >= 0.0 {
                    1.0
                } else {
                    slope
                }
            }
            Elu { alpha } => {
                if x >= 0.0 {
                    1.0
                } else {
                    y + alpha
                }
            }
            Selu { lambda, alpha } => {
                if x >= 0.0 {
                    lambda
                } else {
                    y + lambda * alpha
                }
            }
            Swish { beta } => {
                let s = sigmoid(beta * x);
                s + beta * x * s * (1.0 - s)
            }
            NlRelu { beta } => {
                if x >= 0.0 {
                    beta / (beta * x + 1.0)
                } else {
                    0.0
                }
            }
            Gelu => std_normal_cdf(x) + x * std_normal_pdf(x),
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn elu(alpha: f64, x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        alpha * x.exp_m1()
    }
}

/// Φ(x) through the complementary error function, accurate in both tails.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

impl fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = self.name();
        let default = Self::with_default_params(name).expect("every kind has defaults");
        if *self == default {
            return f.write_str(name);
        }
        let params: Vec<String> = self.params().iter().map(f64::to_string).collect();
        write!(f, "{name}({})", params.join(","))
    }
}

impl FromStr for ActivationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, args) = match s.split_once('(') {
            Some((name, rest)) => {
                let inner = rest
                    .strip_suffix(')')
                    .ok_or_else(|| param_err!("unbalanced parentheses in activation {s:?}"))?;
                let args = inner
                    .split(',')
                    .map(|a| {
                        a.trim()
                            .parse::<f64>()
                            .map_err(|_| param_err!("bad activation parameter {a:?} in {s:?}"))
                    })
                    .collect::<Result<Vec<_>>>()?;
                (name.trim(), Some(args))
            }
            None => (s, None),
        };
        let name = name.to_ascii_lowercase();
        let default = Self::with_default_params(&name)
            .ok_or_else(|| param_err!("unknown activation {name:?}"))?;
        let Some(args) = args else {
            return Ok(default);
        };
        let arity = default.params().len();
        if args.len() != arity {
            return Err(param_err!(
                "{name} takes {arity} parameter(s), got {}",
                args.len()
            ));
        }
        let kind = match default {
            LeakyRelu { .. } => LeakyRelu { slope: args[0] },
            Elu { .. } => Elu { alpha: args[0] },
            Selu { .. } => Selu {
                lambda: args[0],
                alpha: args[1],
            },
            Swish { .. } => Swish { beta: args[0] },
            NlRelu { .. } => NlRelu { beta: args[0] },
            other => other,
        };
        kind.validate()?;
        Ok(kind)
    }
}

impl Serialize for ActivationKind {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ActivationKind {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn pointwise_examples() {
        assert_eq!(Relu.eval(-2.0), 0.0);
        assert!(close(
            ActivationKind::ELU.eval(-1.0),
            (-1f64).exp() - 1.0,
            1e-15
        ));
        assert!(close(ActivationKind::ELU.eval(-1.0), -0.632_120_6, 1e-7));
        let e = std::f64::consts::E;
        assert!(close(ActivationKind::NLRELU.eval(e - 1.0), 1.0, 1e-15));
        assert_eq!(Relu.grad(3.0), 1.0);
        assert_eq!(Sigmoid.grad(0.0), 0.25);
        assert_eq!(Gelu.grad(0.0), 0.5);
    }

    #[test]
    fn right_hand_derivative_at_kinks() {
        assert_eq!(Relu.grad(0.0), 1.0);
        assert_eq!(ActivationKind::LRELU.grad(0.0), 1.0);
        assert_eq!(ActivationKind::ELU.grad(0.0), 1.0);
        assert_eq!(NlRelu { beta: 2.0 }.grad(0.0), 2.0);
        assert_eq!(ActivationKind::SELU.grad(0.0), SELU_LAMBDA);
    }

    #[test]
    fn extreme_inputs_stay_finite() {
        for kind in ActivationKind::ALL {
            for x in [-800.0, -50.0, 50.0, 800.0] {
                assert!(kind.eval(x).is_finite(), "{kind}({x})");
                assert!(kind.grad(x).is_finite(), "{kind}'({x})");
            }
        }
        assert_eq!(Sigmoid.eval(-800.0), 0.0);
        assert_eq!(SoftPlus.eval(800.0), 800.0);
    }

    #[test]
    fn names_round_trip() {
        for kind in ActivationKind::ALL {
            let s = kind.to_string();
            assert_eq!(s, kind.name());
            assert_eq!(s.parse::<ActivationKind>().unwrap(), kind);
        }
        let custom = Elu { alpha: 0.5 };
        assert_eq!(custom.to_string(), "elu(0.5)");
        assert_eq!("elu(0.5)".parse::<ActivationKind>().unwrap(), custom);
        let selu: ActivationKind = "SELU(1.5, 2)".parse().unwrap();
        assert_eq!(
            selu,
            Selu {
                lambda: 1.5,
                alpha: 2.0
            }
        );
        assert_eq!(selu.to_string().parse::<ActivationKind>().unwrap(), selu);
    }

    #[test]
    fn rejects_bad_names_and_ranges() {
        assert!("mish".parse::<ActivationKind>().is_err());
        assert!("elu(2)".parse::<ActivationKind>().is_err());
        assert!("lrelu(-0.1)".parse::<ActivationKind>().is_err());
        assert!("selu(0.9,1)".parse::<ActivationKind>().is_err());
        assert!("nlrelu(0)".parse::<ActivationKind>().is_err());
        assert!("swish(-1)".parse::<ActivationKind>().is_err());
        assert!("elu(1,2)".parse::<ActivationKind>().is_err());
        assert!("elu(1".parse::<ActivationKind>().is_err());
        assert!("relu(1)".parse::<ActivationKind>().is_err());
    }
}
