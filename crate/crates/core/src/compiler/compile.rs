use super::ast::{ExprAst, Factor};
use super::bounds::{infer_bounds, Bounds};
use super::compose::{compose, linear_combination};
use super::gadget::{exp_gadget, log_gadget};
use crate::error::{param_err, Error, Result};
use crate::linalg::Matrix;
use crate::mlp::{DenseLayer, Head, LayeredNetwork};

/// Rewrites power products as `exp(Σ p·ln base)` and sums of products as
/// linear combinations, leaving only variables, constants, `lin`, `exp`, `log`.
pub fn lower(ast: &ExprAst) -> ExprAst {
    match ast {
        ExprAst::Var(_) | ExprAst::Const(_) => ast.clone(),
        ExprAst::Lin {
            coeffs,
            terms,
            bias,
        } => ExprAst::Lin {
            coeffs: coeffs.clone(),
            terms: terms.iter().map(lower).collect(),
            bias: *bias,
        },
        ExprAst::Exp(c) => ExprAst::exp(lower(c)),
        ExprAst::Log(c) => ExprAst::log(lower(c)),
        ExprAst::PowerProduct(fs) => lower_product(fs),
        ExprAst::SumOfProducts(ts) => {
            let mut pairs = Vec::with_capacity(ts.len());
            let mut bias = 0.0;
            for t in ts {
                if t.factors.is_empty() {
                    bias += t.coeff;
                } else {
                    pairs.push((t.coeff, lower_product(&t.factors)));
                }
            }
            if pairs.is_empty() {
                ExprAst::Const(bias)
            } else {
                ExprAst::lin(pairs, bias)
            }
        }
    }
}

fn lower_product(factors: &[Factor]) -> ExprAst {
    if factors.is_empty() {
        return ExprAst::Const(1.0);
    }
    ExprAst::exp(ExprAst::lin(
        factors
            .iter()
            .map(|f| (f.exponent, ExprAst::log(lower(&f.base))))
            .collect(),
        0.0,
    ))
}

/// Builds a network computing `ast` exactly (up to rounding) on the box
/// given by `inputs`, one bound per network input.
///
/// Every `exp` gets the gadget bound `M` from the upper end of its argument's
/// interval; every `log` gets `δ` from the lower end of its argument's.
pub fn compile(ast: &ExprAst, inputs: &[Bounds]) -> Result<LayeredNetwork> {
    if inputs.is_empty() {
        return Err(param_err!("compiled networks need at least one input"));
    }
    infer_bounds(ast, inputs)?;
    let (net, _) = build(&lower(ast), inputs)?;
    Ok(net)
}

fn affine(inputs: usize, row: Vec<f64>, bias: f64) -> Result<LayeredNetwork> {
    LayeredNetwork::new(
        inputs,
        vec![DenseLayer::new(
            Matrix::from_vec(1, inputs, row)?,
            vec![bias],
            None,
        )],
        Head::Identity,
    )
}

fn build(e: &ExprAst, inputs: &[Bounds]) -> Result<(LayeredNetwork, Bounds)> {
    let n = inputs.len();
    match e {
        ExprAst::Var(i) => {
            let b = *inputs
                .get(*i)
                .ok_or_else(|| param_err!("no bounds given for x{}", i + 1))?;
            let mut row = vec![0.0; n];
            row[*i] = 1.0;
            Ok((affine(n, row, 0.0)?, b))
        }
        ExprAst::Const(c) => Ok((affine(n, vec![0.0; n], *c)?, Bounds::point(*c)?)),
        ExprAst::Lin {
            coeffs,
            terms,
            bias,
        } => {
            if terms.is_empty() {
                return Ok((affine(n, vec![0.0; n], *bias)?, Bounds::point(*bias)?));
            }
            let mut nets = Vec::with_capacity(terms.len());
            let (mut lo, mut hi) = (*bias, *bias);
            for (c, t) in coeffs.iter().zip(terms) {
                let (net, b) = build(t, inputs)?;
                let (a, z) = (c * b.lo, c * b.hi);
                lo += a.min(z);
                hi += a.max(z);
                nets.push(net);
            }
            let bounds = finite(lo, hi)?;
            Ok((linear_combination(coeffs, nets, *bias)?, bounds))
        }
        ExprAst::Exp(c) => {
            let (inner, b) = build(c, inputs)?;
            let net = compose(&exp_gadget(b.hi)?, vec![inner])?;
            Ok((net, finite(b.lo.exp(), b.hi.exp())?))
        }
        ExprAst::Log(c) => {
            let (inner, b) = build(c, inputs)?;
            if b.lo <= 0.0 {
                return Err(Error::Domain(format!(
                    "log argument can reach {} on the given domain",
                    b.lo
                )));
            }
            let net = compose(&log_gadget(b.lo)?, vec![inner])?;
            Ok((net, finite(b.lo.ln(), b.hi.ln())?))
        }
        ExprAst::PowerProduct(_) | ExprAst::SumOfProducts(_) => build(&lower(e), inputs),
    }
}

fn finite(lo: f64, hi: f64) -> Result<Bounds> {
    if lo.is_finite() && hi.is_finite() {
        Bounds::new(lo, hi)
    } else {
        Err(Error::Bound(format!(
            "intermediate value unbounded: [{lo}, {hi}]"
        )))
    }
}
