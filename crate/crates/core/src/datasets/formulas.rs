use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::table::{Column, Provenance, TabularDataset, Task};
use crate::activation::std_normal_cdf;
use crate::dist::Dist;
use crate::error::{param_err, Error, Result};
use crate::rng::Rng;

/// Universal gas constant, J/(mol·K).
pub const GAS_CONSTANT: f64 = 8.314;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formula {
    /// Gaussian density at a sampled point.
    Gs,
    /// Modified Arrhenius equation.
    Ar,
    /// Speed of a steady 3D vortex solution.
    Ns,
    /// Black–Scholes put price.
    Bs,
}

impl Formula {
    pub const ALL: [Formula; 4] = [Formula::Gs, Formula::Ar, Formula::Ns, Formula::Bs];

    pub fn name(self) -> &'static str {
        match self {
            Formula::Gs => "gs",
            Formula::Ar => "ar",
            Formula::Ns => "ns",
            Formula::Bs => "bs",
        }
    }

    pub fn generate(self, n: usize, rng: &mut Rng) -> Result<TabularDataset> {
        match self {
            Formula::Gs => gen_gs(n, rng),
            Formula::Ar => gen_ar(n, rng),
            Formula::Ns => gen_ns(n, rng),
            Formula::Bs => gen_bs(n, rng),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Formula {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Formula::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| param_err!("unknown formula '{s}' (expected gs, ar, ns or bs)"))
    }
}

pub fn gaussian_pdf(v: f64, mean: f64, std: f64) -> f64 {
    let z = (v - mean) / std;
    (-0.5 * z * z).exp() / (std * (2.0 * PI).sqrt())
}

/// `k = A·T^n·exp(−Ea / (R·T))`
pub fn arrhenius(n: f64, t: f64, ea: f64, a: f64) -> f64 {
    a * t.powf(n) * (-ea / (GAS_CONSTANT * t)).exp()
}

/// Euclidean norm of the vortex velocity field at `(x, y, z)` for coil radius `r`.
pub fn vortex_speed(a: f64, r: f64, x: f64, y: f64, z: f64) -> f64 {
    let s = r * r + x * x + y * y + z * z;
    let u1 = 2.0 * (-r * y + x * z);
    let u2 = 2.0 * (r * x + y * z);
    let u3 = r * r - x * x - y * y + z * z;
    a / (s * s) * (u1 * u1 + u2 * u2 + u3 * u3).sqrt()
}

/// European call price; `tau` is the time to expiry `T − t`.
pub fn black_scholes_call(sigma: f64, tau: f64, s: f64, k: f64, r: f64) -> f64 {
    let vol = sigma * tau.sqrt();
    let log_moneyness = (s / k).ln();
    let d1 = (log_moneyness + (r + sigma * sigma / 2.0) * tau) / vol;
    let d2 = (log_moneyness + (r - sigma * sigma / 2.0) * tau) / vol;
    std_normal_cdf(d1) * s - std_normal_cdf(d2) * k * (-r * tau).exp()
}

/// European put price from put–call parity.
pub fn black_scholes_put(sigma: f64, tau: f64, s: f64, k: f64, r: f64) -> f64 {
    k * (-r * tau).exp() - s + black_scholes_call(sigma, tau, s, k, r)
}

fn check_rows(n: usize) -> Result<()> {
    if n == 0 {
        Err(param_err!("a generated dataset needs at least one row"))
    } else {
        Ok(())
    }
}

fn provenance(name: &str, rng: &Rng) -> Provenance {
    Provenance {
        source: name.to_string(),
        seed: Some(rng.seed()),
    }
}

fn mean_and_sample_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Eight draws from `N(μ, σ)` with `μ ~ N(0, 10)`, `σ ~ U(1, 6)`, and
/// `v ~ N(x̄, σₓ)`; the target is the density of `N(x̄, σₓ)` at `v`.
/// `σₓ` is the sample standard deviation (divisor 7).
pub fn gen_gs(n: usize, rng: &mut Rng) -> Result<TabularDataset> {
    check_rows(n)?;
    let mu_dist = Dist::normal(0.0, 10.0);
    let sigma_dist = Dist::uniform(1.0, 6.0);
    let mut xs: Vec<Vec<f64>> = (0..8).map(|_| Vec::with_capacity(n)).collect();
    let (mut v_col, mut target) = (Vec::with_capacity(n), Vec::with_capacity(n));
    let (mut mu_col, mut sigma_col) = (Vec::with_capacity(n), Vec::with_capacity(n));
    while target.len() < n {
        let mu = mu_dist.sample(rng)?;
        let sigma = sigma_dist.sample(rng)?;
        let row: Vec<f64> = (0..8).map(|_| rng.normal(mu, sigma)).collect();
        let (mean, std) = mean_and_sample_std(&row);
        if std <= 0.0 {
            continue;
        }
        let v = rng.normal(mean, std);
        for (col, x) in xs.iter_mut().zip(&row) {
            col.push(*x);
        }
        v_col.push(v);
        target.push(gaussian_pdf(v, mean, std));
        mu_col.push(mu);
        sigma_col.push(sigma);
    }
    let mut features: Vec<Column> = xs
        .into_iter()
        .enumerate()
        .map(|(i, c)| Column::numeric(format!("x{}", i + 1), c))
        .collect();
    features.push(Column::numeric("v", v_col));
    TabularDataset::with_latent(
        features,
        "f",
        target,
        Task::Regression,
        vec![
            Column::numeric("mu", mu_col),
            Column::numeric("sigma", sigma_col),
        ],
        provenance("gs", rng),
    )
}

/// `n ~ V(0, 10)`, `T ~ U(1, 11)`, `Ea ~ U(0, 100)`, `A ~ U(0, 1)·10^V(−2, 1)`.
pub fn gen_ar(n: usize, rng: &mut Rng) -> Result<TabularDataset> {
    check_rows(n)?;
    let dists = [
        Dist::int_uniform(0, 10),
        Dist::uniform(1.0, 11.0),
        Dist::uniform(0.0, 100.0),
        Dist::exp_scaled(Dist::uniform(0.0, 1.0), Dist::int_uniform(-2, 1)),
    ];
    let mut cols: Vec<Vec<f64>> = (0..4).map(|_| Vec::with_capacity(n)).collect();
    let mut target = Vec::with_capacity(n);
    for _ in 0..n {
        let row = dists
            .iter()
            .map(|d| d.sample(rng))
            .collect::<Result<Vec<_>>>()?;
        target.push(arrhenius(row[0], row[1], row[2], row[3]));
        for (c, v) in cols.iter_mut().zip(row) {
            c.push(v);
        }
    }
    let features = ["n", "T", "Ea", "A"]
        .into_iter()
        .zip(cols)
        .map(|(name, c)| Column::numeric(name, c))
        .collect();
    TabularDataset::new(
        features,
        "k",
        target,
        Task::Regression,
        provenance("ar", rng),
    )
}

/// `A ~ U(0, 1)`; `r, x, y, z ~ U(1, 10)·10^D([−3, −2, −1, 0, 1], [.1, .2, .4, .2, .1])`.
pub fn gen_ns(n: usize, rng: &mut Rng) -> Result<TabularDataset> {
    check_rows(n)?;
    let a_dist = Dist::uniform(0.0, 1.0);
    let coord = Dist::exp_scaled(
        Dist::uniform(1.0, 10.0),
        Dist::discrete(
            vec![-3.0, -2.0, -1.0, 0.0, 1.0],
            vec![0.1, 0.2, 0.4, 0.2, 0.1],
        ),
    );
    let mut cols: Vec<Vec<f64>> = (0..5).map(|_| Vec::with_capacity(n)).collect();
    let mut target = Vec::with_capacity(n);
    for _ in 0..n {
        let a = a_dist.sample(rng)?;
        let r = coord.sample(rng)?;
        let x = coord.sample(rng)?;
        let y = coord.sample(rng)?;
        let z = coord.sample(rng)?;
        target.push(vortex_speed(a, r, x, y, z));
        for (c, v) in cols.iter_mut().zip([a, r, x, y, z]) {
            c.push(v);
        }
    }
    let features = ["A", "r", "x", "y", "z"]
        .into_iter()
        .zip(cols)
        .map(|(name, c)| Column::numeric(name, c))
        .collect();
    TabularDataset::new(
        features,
        "u",
        target,
        Task::Regression,
        provenance("ns", rng),
    )
}

/// `σ ~ U(0, 100)`, `T − t ~ V(1, 9)·10^V(1, 3)`, `S ~ U(1, 10)·10^b`,
/// `K ~ U(1, 10)·10^b` with the same `b ~ V(0, 4)`, `r ~ U(0, 0.1)`.
pub fn gen_bs(n: usize, rng: &mut Rng) -> Result<TabularDataset> {
    check_rows(n)?;
    let sigma_dist = Dist::uniform(0.0, 100.0);
    let tau_dist = Dist::exp_scaled(Dist::int_uniform(1, 9), Dist::int_uniform(1, 3));
    let mantissa = Dist::uniform(1.0, 10.0);
    let exponent = Dist::int_uniform(0, 4);
    let rate = Dist::uniform(0.0, 0.1);
    let mut cols: Vec<Vec<f64>> = (0..5).map(|_| Vec::with_capacity(n)).collect();
    let mut target = Vec::with_capacity(n);
    while target.len() < n {
        let sigma = sigma_dist.sample(rng)?;
        if sigma == 0.0 {
            continue;
        }
        let tau = tau_dist.sample(rng)?;
        let b = exponent.sample(rng)?;
        let s = mantissa.sample(rng)? * 10f64.powf(b);
        let k = mantissa.sample(rng)? * 10f64.powf(b);
        let r = rate.sample(rng)?;
        target.push(black_scholes_put(sigma, tau, s, k, r));
        for (c, v) in cols.iter_mut().zip([sigma, tau, s, k, r]) {
            c.push(v);
        }
    }
    let features = ["sigma", "tau", "S", "K", "r"]
        .into_iter()
        .zip(cols)
        .map(|(name, c)| Column::numeric(name, c))
        .collect();
    TabularDataset::new(
        features,
        "P",
        target,
        Task::Regression,
        provenance("bs", rng),
    )
}
