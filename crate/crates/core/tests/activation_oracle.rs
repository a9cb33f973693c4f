//! Activations against independently written closed forms, with Φ for GELU
//! obtained by Gauss–Legendre quadrature of the normal density.

use combu::activation::{SELU_ALPHA, SELU_LAMBDA};
use combu::{ActivationKind, Rng};

const POINTS: usize = 1000;

fn close(actual: f64, expected: f64, tol: f64) -> bool {
    (actual - expected).abs() <= tol * expected.abs().max(1.0)
}

/// Nodes and weights of the n-point Gauss–Legendre rule on [−1, 1].
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut rule = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        rule.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    rule
}

/// Φ(x) = ½ + ∫₀ˣ φ(t) dt, composite 20-point rule on 64 panels.
fn phi_by_quadrature(x: f64, rule: &[(f64, f64)]) -> f64 {
    let panels = 64;
    let h = x / panels as f64;
    let mut sum = 0.0;
    for p in 0..panels {
        let mid = (p as f64 + 0.5) * h;
        for &(node, weight) in rule {
            let t = mid + 0.5 * h * node;
            sum += weight * (-0.5 * t * t).exp();
        }
    }
    0.5 + sum * 0.5 * h / (2.0 * std::f64::consts::PI).sqrt()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn closed_form(kind: &ActivationKind, x: f64, rule: &[(f64, f64)]) -> f64 {
    match *kind {
        ActivationKind::Sigmoid => sigmoid(x),
        ActivationKind::Relu => x.max(0.0),
        ActivationKind::SoftPlus => x.exp().ln_1p(),
        ActivationKind::Tanh => {
            let (a, b) = (x.exp(), (-x).exp());
            (a - b) / (a + b)
        }
        ActivationKind::LeakyRelu { slope } => {
            if x < 0.0 {
                slope * x
            } else {
                x
            }
        }
        ActivationKind::Elu { alpha } => {
            if x > 0.0 {
                x
            } else {
                alpha * (x.exp() - 1.0)
            }
        }
        ActivationKind::Selu { lambda, alpha } => {
            lambda * if x > 0.0 { x } else { alpha * (x.exp() - 1.0) }
        }
        ActivationKind::Swish { beta } => x / (1.0 + (-beta * x).exp()),
        ActivationKind::NlRelu { beta } => (beta * x.max(0.0) + 1.0).ln(),
        ActivationKind::Gelu => x * phi_by_quadrature(x, rule),
    }
}

fn kinds() -> Vec<ActivationKind> {
    let mut all = ActivationKind::ALL.to_vec();
    all.extend([
        ActivationKind::Elu { alpha: 0.5 },
        ActivationKind::Swish { beta: 2.0 },
        ActivationKind::NlRelu { beta: 3.0 },
        ActivationKind::LeakyRelu { slope: 0.2 },
    ]);
    all
}

#[test]
fn all_ten_table_functions_are_present() {
    let mut names: Vec<&str> = ActivationKind::ALL.iter().map(|k| k.name()).collect();
    names.sort_unstable();
    assert_eq!(
        names,
        [
            "elu", "gelu", "lrelu", "nlrelu", "relu", "selu", "sigmoid", "softplus", "swish",
            "tanh"
        ]
    );
}

#[test]
fn quadrature_reproduces_known_phi_values() {
    let rule = gauss_legendre(20);
    assert!((phi_by_quadrature(0.0, &rule) - 0.5).abs() < 1e-15);
    assert!((phi_by_quadrature(1.0, &rule) - 0.841_344_746_068_542_9).abs() < 1e-15);
    assert!((phi_by_quadrature(-1.959_963_984_540_054, &rule) - 0.025).abs() < 1e-15);
}

#[test]
fn values_match_closed_forms() {
    let rule = gauss_legendre(20);
    let mut rng = Rng::new(11);
    for kind in kinds() {
        for _ in 0..POINTS {
            let x = rng.uniform_in(-10.0, 10.0);
            let (got, want) = (kind.eval(x), closed_form(&kind, x, &rule));
            assert!(close(got, want, 1e-12), "{kind} at {x}: {got} vs {want}");
        }
    }
}

#[test]
fn selu_constants() {
    assert!((SELU_LAMBDA - 1.0507009873554805).abs() < 1e-15);
    assert!((SELU_ALPHA - 1.6732632423543772).abs() < 1e-15);
}

#[test]
fn derivatives_match_central_differences() {
    let h = 1e-6;
    let mut rng = Rng::new(12);
    for kind in kinds() {
        let mut checked = 0;
        while checked < POINTS {
            let x = rng.uniform_in(-8.0, 8.0);
            if x.abs() < 1e-3 {
                continue;
            }
            let fd = (kind.eval(x + h) - kind.eval(x - h)) / (2.0 * h);
            let g = kind.grad(x);
            assert!(close(g, fd, 1e-5), "{kind}' at {x}: {g} vs {fd}");
            assert_eq!(g, kind.grad_with_output(x, kind.eval(x)));
            checked += 1;
        }
    }
}

#[test]
fn kink_conventions() {
    assert_eq!(ActivationKind::Relu.eval(0.0), 0.0);
    assert_eq!(ActivationKind::NLRELU.eval(-3.0), 0.0);
    assert_eq!(ActivationKind::NLRELU.eval(0.0), 0.0);
    assert_eq!(ActivationKind::ELU.eval(0.0), 0.0);
}
