use serde::{Deserialize, Serialize};

use super::ast::ExprAst;
use super::bounds::Bounds;
use crate::error::{param_err, shape_err, Result};
use crate::linalg::Matrix;
use crate::mlp::LayeredNetwork;
use crate::rng::Rng;

/// Below this magnitude of the true value, absolute error is reported instead of relative.
pub const RELATIVE_FLOOR: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub samples: usize,
    pub max_error: f64,
    /// Input where `max_error` was reached.
    pub worst_input: Vec<f64>,
    pub worst_expected: f64,
    pub worst_actual: f64,
}

/// Relative error, or absolute error when `|expected| < RELATIVE_FLOOR`.
pub fn relative_error(actual: f64, expected: f64) -> f64 {
    let diff = (actual - expected).abs();
    if expected.abs() < RELATIVE_FLOOR {
        diff
    } else {
        diff / expected.abs()
    }
}

/// Uniform draw from the interval, rejecting values inside `(−min_abs, min_abs)` other than 0.
pub fn sample_in(b: &Bounds, rng: &mut Rng) -> f64 {
    if b.lo == b.hi {
        return b.lo;
    }
    // An interval inside the excluded band leaves only 0 (or nothing usable).
    if b.lo > -b.min_abs && b.hi < b.min_abs {
        return 0.0;
    }
    loop {
        let v = rng.uniform_in(b.lo, b.hi);
        if v.abs() >= b.min_abs {
            return v;
        }
    }
}

/// Compares `net` against the direct interpreter of `ast` at `n_samples`
/// uniform points of the input box.
pub fn verify(
    net: &LayeredNetwork,
    ast: &ExprAst,
    inputs: &[Bounds],
    n_samples: usize,
    rng: &mut Rng,
) -> Result<VerifyReport> {
    if n_samples == 0 {
        return Err(param_err!("verify needs at least one sample"));
    }
    let n = inputs.len();
    if net.input_dim() != n || net.output_dim() != 1 {
        return Err(shape_err!(
            "network maps {} -> {}, expected {n} -> 1",
            net.input_dim(),
            net.output_dim()
        ));
    }
    if ast.num_vars() > n {
        return Err(param_err!(
            "expression uses {} variables but {n} bounds were given",
            ast.num_vars()
        ));
    }
    let mut report = VerifyReport {
        samples: n_samples,
        max_error: 0.0,
        worst_input: vec![],
        worst_expected: f64::NAN,
        worst_actual: f64::NAN,
    };
    const CHUNK: usize = 4096;
    let mut done = 0;
    while done < n_samples {
        let rows = CHUNK.min(n_samples - done);
        let mut x = Matrix::zeros(rows, n);
        for r in 0..rows {
            for (v, b) in x.row_mut(r).iter_mut().zip(inputs) {
                *v = sample_in(b, rng);
            }
        }
        let y = net.predict_batch(&x)?;
        for r in 0..rows {
            let expected = ast.eval(x.row(r));
            let actual = y[(r, 0)];
            let err = relative_error(actual, expected);
            // NaN errors must surface as the worst case.
            if report.worst_input.is_empty() || err > report.max_error || err.is_nan() {
                report.max_error = err;
                report.worst_input = x.row(r).to_vec();
                report.worst_expected = expected;
                report.worst_actual = actual;
                if err.is_nan() {
                    return Ok(report);
                }
            }
        }
        done += rows;
    }
    Ok(report)
}
