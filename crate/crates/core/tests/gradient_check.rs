//! Backpropagation against central finite differences of the loss, for the
//! Small network under each of the seven compared schemes.

use combu::mlp::{build_paper_mlp, Loss, Mode, Targets};
use combu::{ActivationScheme, Head, LayeredNetwork, Matrix, ModelSize, Rng};

const H: f64 = 1e-5;
const TOL: f64 = 1e-4;
/// Below this magnitude the comparison is absolute: finite differences carry
/// about ε·|L|/h ≈ 1e-11 of rounding noise.
const FLOOR: f64 = 1e-5;
const WEIGHTS_PER_LAYER: usize = 150;

fn loss(net: &LayeredNetwork, x: &Matrix, y: &Targets) -> f64 {
    let (out, _) = net.forward_batch(x, Mode::Eval).unwrap();
    Loss::for_head(net.head())
        .value_and_grad(&out, y)
        .unwrap()
        .0
}

fn check(net: &mut LayeredNetwork, x: &Matrix, y: &Targets, rng: &mut Rng, label: &str) {
    let (out, tape) = net.forward_batch(x, Mode::Eval).unwrap();
    let (_, d) = Loss::for_head(net.head()).value_and_grad(&out, y).unwrap();
    let grads = net.backward(&tape, &d).unwrap();
    let analytic: Vec<Vec<f64>> = grads
        .layers
        .iter()
        .flat_map(|g| [g.weights.as_slice().to_vec(), g.bias.clone()])
        .collect();

    let sizes: Vec<usize> = analytic.iter().map(Vec::len).collect();
    let mut worst: f64 = 0.0;
    for (block, &len) in sizes.iter().enumerate() {
        // Every bias, a random sample of weights.
        let indices: Vec<usize> = if block % 2 == 1 || len <= WEIGHTS_PER_LAYER {
            (0..len).collect()
        } else {
            (0..WEIGHTS_PER_LAYER).map(|_| rng.index(len)).collect()
        };
        for i in indices {
            let orig = net.parameters_mut()[block][i];
            net.parameters_mut()[block][i] = orig + H;
            let up = loss(net, x, y);
            net.parameters_mut()[block][i] = orig - H;
            let down = loss(net, x, y);
            net.parameters_mut()[block][i] = orig;
            let numeric = (up - down) / (2.0 * H);
            let a = analytic[block][i];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(FLOOR);
            assert!(
                rel <= TOL,
                "{label}: block {block} index {i}: analytic {a}, numeric {numeric}, rel {rel}"
            );
            worst = worst.max(rel);
        }
    }
    eprintln!("{label}: worst relative error {worst:e}");
}

fn regression_data(rng: &mut Rng, rows: usize, cols: usize) -> (Matrix, Targets) {
    let x = Matrix::from_fn(rows, cols, |_, _| rng.standard_normal());
    let y = Matrix::from_fn(rows, 1, |_, _| rng.standard_normal());
    (x, Targets::Regression(y))
}

#[test]
fn seven_schemes_regression() {
    for (k, scheme) in ActivationScheme::table_schemes().iter().enumerate() {
        let mut rng = Rng::new(100 + k as u64);
        let (x, y) = regression_data(&mut rng, 6, 5);
        let mut net = build_paper_mlp(
            5,
            1,
            ModelSize::Small,
            scheme,
            Head::Identity,
            &rng.child(7),
        )
        .unwrap();
        check(&mut net, &x, &y, &mut rng, &scheme.to_string());
    }
}

#[test]
fn seven_schemes_softmax_cross_entropy() {
    for (k, scheme) in ActivationScheme::table_schemes().iter().enumerate() {
        let mut rng = Rng::new(200 + k as u64);
        let x = Matrix::from_fn(6, 4, |_, _| rng.standard_normal());
        let labels: Vec<usize> = (0..6).map(|i| i % 3).collect();
        let y = Targets::Classes {
            labels,
            n_classes: 3,
        };
        let mut net =
            build_paper_mlp(4, 3, ModelSize::Small, scheme, Head::Softmax, &rng.child(7)).unwrap();
        check(&mut net, &x, &y, &mut rng, &format!("{scheme} softmax"));
    }
}

#[test]
fn large_combu_network() {
    let mut rng = Rng::new(300);
    let (x, y) = regression_data(&mut rng, 4, 9);
    let mut net = build_paper_mlp(
        9,
        1,
        ModelSize::Large,
        &ActivationScheme::combu(),
        Head::Identity,
        &rng.child(7),
    )
    .unwrap();
    check(&mut net, &x, &y, &mut rng, "combu large");
}
