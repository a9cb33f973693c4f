use serde::{Deserialize, Serialize};

use super::ast::{ExprAst, Factor};
use crate::error::{param_err, Error, Result};

/// Closed interval `[lo, hi]` with a floor `min_abs` on the magnitude of its
/// non-zero members: the domain is `[lo, hi] ∖ (−min_abs, min_abs) ∪ {0}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBounds")]
pub struct Bounds {
    pub lo: f64,
    pub hi: f64,
    pub min_abs: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBounds {
    lo: f64,
    hi: f64,
    #[serde(default)]
    min_abs: f64,
}

impl TryFrom<RawBounds> for Bounds {
    type Error = Error;

    fn try_from(raw: RawBounds) -> Result<Self> {
        Bounds::with_min_abs(raw.lo, raw.hi, raw.min_abs)
    }
}

impl Bounds {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        Self::with_min_abs(lo, hi, 0.0)
    }

    /// Validates the interval. `min_abs` is raised to the distance from zero
    /// when the interval excludes it.
    pub fn with_min_abs(lo: f64, hi: f64, min_abs: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::Bound(format!("interval [{lo}, {hi}] is not finite")));
        }
        if lo > hi {
            return Err(param_err!("interval [{lo}, {hi}] has lo > hi"));
        }
        if !(min_abs >= 0.0 && min_abs.is_finite()) {
            return Err(param_err!(
                "min_abs must be finite and non-negative, got {min_abs}"
            ));
        }
        let floor = if lo > 0.0 {
            lo
        } else if hi < 0.0 {
            -hi
        } else {
            0.0
        };
        Ok(Self {
            lo,
            hi,
            min_abs: min_abs.max(floor),
        })
    }

    pub fn point(v: f64) -> Result<Self> {
        Self::new(v, v)
    }

    /// `M`: the largest magnitude in the interval.
    pub fn magnitude(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi && (v == 0.0 || v.abs() >= self.min_abs)
    }

    fn scale(&self, c: f64) -> (f64, f64) {
        let (a, b) = (c * self.lo, c * self.hi);
        (a.min(b), a.max(b))
    }
}

/// Bounds for every node, shaped like the expression tree. Children follow
/// [`ExprAst::children`] except for sums, which get one node per term
/// (bounds of the bare product) whose children are that term's bases.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundsTree {
    pub bounds: Bounds,
    pub children: Vec<BoundsTree>,
}

fn checked(lo: f64, hi: f64, what: &str) -> Result<Bounds> {
    if lo.is_finite() && hi.is_finite() {
        Bounds::new(lo, hi)
    } else {
        Err(Error::Bound(format!("{what} is unbounded: [{lo}, {hi}]")))
    }
}

fn positive(b: &Bounds, what: &str) -> Result<()> {
    if b.lo > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "{what} needs a strictly positive argument, but it can reach {}",
            b.lo
        )))
    }
}

/// Interval arithmetic over the tree.
pub fn infer_bounds(ast: &ExprAst, inputs: &[Bounds]) -> Result<BoundsTree> {
    match ast {
        ExprAst::Var(i) => inputs
            .get(*i)
            .map(|b| BoundsTree {
                bounds: *b,
                children: vec![],
            })
            .ok_or_else(|| param_err!("no bounds given for x{}", i + 1)),
        ExprAst::Const(c) => Ok(BoundsTree {
            bounds: checked(*c, *c, "constant")?,
            children: vec![],
        }),
        ExprAst::Lin {
            coeffs,
            terms,
            bias,
        } => {
            if coeffs.len() != terms.len() {
                return Err(param_err!("linear combination has mismatched coefficients"));
            }
            let children = terms
                .iter()
                .map(|t| infer_bounds(t, inputs))
                .collect::<Result<Vec<_>>>()?;
            let (mut lo, mut hi) = (*bias, *bias);
            for (c, child) in coeffs.iter().zip(&children) {
                let (a, b) = child.bounds.scale(*c);
                lo += a;
                hi += b;
            }
            Ok(BoundsTree {
                bounds: checked(lo, hi, "linear combination")?,
                children,
            })
        }
        ExprAst::Exp(c) => {
            let child = infer_bounds(c, inputs)?;
            let b = child.bounds;
            Ok(BoundsTree {
                bounds: checked(b.lo.exp(), b.hi.exp(), "exp")?,
                children: vec![child],
            })
        }
        ExprAst::Log(c) => {
            let child = infer_bounds(c, inputs)?;
            let b = child.bounds;
            positive(&b, "log")?;
            Ok(BoundsTree {
                bounds: checked(b.lo.ln(), b.hi.ln(), "log")?,
                children: vec![child],
            })
        }
        ExprAst::PowerProduct(factors) => product_bounds(factors, inputs),
        ExprAst::SumOfProducts(terms) => {
            let mut children = Vec::with_capacity(terms.len());
            let (mut lo, mut hi) = (0.0, 0.0);
            for t in terms {
                let node = product_bounds(&t.factors, inputs)?;
                let (a, b) = node.bounds.scale(t.coeff);
                lo += a;
                hi += b;
                children.push(node);
            }
            Ok(BoundsTree {
                bounds: checked(lo, hi, "sum of products")?,
                children,
            })
        }
    }
}

/// `Π base^p` bounded through `exp(Σ p·ln base)`.
fn product_bounds(factors: &[Factor], inputs: &[Bounds]) -> Result<BoundsTree> {
    let mut children = Vec::with_capacity(factors.len());
    let (mut lo, mut hi) = (0.0f64, 0.0f64);
    for f in factors {
        let node = infer_bounds(&f.base, inputs)?;
        positive(&node.bounds, "power base")?;
        let logs = Bounds::new(node.bounds.lo.ln(), node.bounds.hi.ln())?;
        let (a, b) = logs.scale(f.exponent);
        lo += a;
        hi += b;
        children.push(node);
    }
    Ok(BoundsTree {
        bounds: checked(lo.exp(), hi.exp(), "power product")?,
        children,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler::parse_expr;

    fn tree(text: &str, inputs: &[Bounds]) -> Result<BoundsTree> {
        infer_bounds(&parse_expr(text).unwrap(), inputs)
    }

    #[test]
    fn documented_examples() {
        let x = [Bounds::new(1.0, 10.0).unwrap()];
        let b = tree("(log x1)", &x).unwrap().bounds;
        assert_eq!((b.lo, b.hi), (0.0, 10f64.ln()));
        let b = tree("(const 3)", &[]).unwrap().bounds;
        assert_eq!((b.lo, b.hi), (3.0, 3.0));
        let b = tree("(lin 2 x1 -1)", &[Bounds::new(0.0, 1.0).unwrap()])
            .unwrap()
            .bounds;
        assert_eq!((b.lo, b.hi), (-1.0, 1.0));
    }

    #[test]
    fn power_products_and_sums() {
        let x = [
            Bounds::new(1.0, 5.0).unwrap(),
            Bounds::new(1.0, 5.0).unwrap(),
        ];
        let b = tree("(prod (pow x1 2) (pow x2 -1))", &x).unwrap().bounds;
        assert!((b.lo - 0.2).abs() < 1e-12 && (b.hi - 25.0).abs() < 1e-12);
        let t = tree("(sum (term -2 (pow x1 1)) (term 3))", &x).unwrap();
        assert!((t.bounds.lo + 7.0).abs() < 1e-12 && (t.bounds.hi - 1.0).abs() < 1e-12);
        assert_eq!(t.children.len(), 2);
    }

    #[test]
    fn domain_and_bound_errors() {
        let x = [Bounds::new(-1.0, 1.0).unwrap()];
        assert!(matches!(tree("(log x1)", &x), Err(Error::Domain(_))));
        assert!(matches!(tree("(pow x1 2)", &x), Err(Error::Domain(_))));
        let big = [Bounds::new(0.0, 800.0).unwrap()];
        assert!(matches!(tree("(exp x1)", &big), Err(Error::Bound(_))));
        assert!(tree("x2", &x).is_err());
    }

    #[test]
    fn min_abs_follows_the_interval() {
        let b = Bounds::with_min_abs(-5.0, 5.0, 0.01).unwrap();
        assert_eq!(b.magnitude(), 5.0);
        assert!(b.contains(0.0) && !b.contains(0.005) && b.contains(-0.02));
        assert_eq!(Bounds::new(2.0, 3.0).unwrap().min_abs, 2.0);
        assert!(Bounds::new(2.0, 1.0).is_err());
        let json: Bounds = serde_json::from_str(r#"{"lo":1,"hi":5}"#).unwrap();
        assert_eq!(json.min_abs, 1.0);
        assert!(serde_json::from_str::<Bounds>(r#"{"lo":5,"hi":1}"#).is_err());
    }
}
