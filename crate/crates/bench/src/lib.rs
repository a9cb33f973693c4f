//! Shared fixtures for the criterion benchmarks in `benches/`.

use combu::mlp::Targets;
use combu::{Matrix, Rng};

/// Standard-normal inputs and targets of the given shape.
pub fn regression_batch(rows: usize, cols: usize, seed: u64) -> (Matrix, Targets) {
    let mut rng = Rng::new(seed);
    let x = Matrix::from_fn(rows, cols, |_, _| rng.standard_normal());
    let y = Matrix::from_fn(rows, 1, |_, _| rng.standard_normal());
    (x, Targets::Regression(y))
}

/// Evenly spaced points over `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / (n.max(2) - 1) as f64;
    (0..n).map(|i| lo + i as f64 * step).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_have_requested_shapes() {
        let (x, y) = regression_batch(7, 3, 1);
        assert_eq!(x.shape(), (7, 3));
        assert_eq!(y.len(), 7);
        let l = linspace(-1.0, 1.0, 5);
        assert_eq!(l, [-1.0, -0.5, 0.0, 0.5, 1.0]);
    }
}
