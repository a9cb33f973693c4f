//! Sampling distributions used by the formula dataset generators.

use crate::error::{param_err, Result};
use crate::rng::Rng;

#[derive(Clone, Debug, PartialEq)]
pub enum Dist {
    Normal {
        mean: f64,
        std: f64,
    },
    /// Continuous uniform on `[lo, hi)`.
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// Integers in `lo..=hi`.
    IntUniform {
        lo: i64,
        hi: i64,
    },
    Discrete {
        values: Vec<f64>,
        probs: Vec<f64>,
    },
    /// `a * 10^b` with `a ~ mantissa`, `b ~ exponent`.
    ExpScaled {
        mantissa: Box<Dist>,
        exponent: Box<Dist>,
    },
}

impl Dist {
    pub fn normal(mean: f64, std: f64) -> Self {
        Dist::Normal { mean, std }
    }

    pub fn uniform(lo: f64, hi: f64) -> Self {
        Dist::Uniform { lo, hi }
    }

    pub fn int_uniform(lo: i64, hi: i64) -> Self {
        Dist::IntUniform { lo, hi }
    }

    pub fn discrete(values: Vec<f64>, probs: Vec<f64>) -> Self {
        Dist::Discrete { values, probs }
    }

    pub fn exp_scaled(mantissa: Dist, exponent: Dist) -> Self {
        Dist::ExpScaled {
            mantissa: Box::new(mantissa),
            exponent: Box::new(exponent),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Dist::Normal { mean, std } => {
                if !mean.is_finite() || !std.is_finite() || *std < 0.0 {
                    return Err(param_err!(
                        "normal({mean}, {std}) needs finite mean and std >= 0"
                    ));
                }
            }
            Dist::Uniform { lo, hi } => {
                if !lo.is_finite() || !hi.is_finite() || lo > hi {
                    return Err(param_err!("uniform({lo}, {hi}) needs finite lo <= hi"));
                }
            }
            Dist::IntUniform { lo, hi } => {
                if lo > hi {
                    return Err(param_err!("int-uniform({lo}, {hi}) needs lo <= hi"));
                }
            }
            Dist::Discrete { values, probs } => {
                if values.is_empty() || values.len() != probs.len() {
                    return Err(param_err!(
                        "discrete distribution needs equally many values and probabilities"
                    ));
                }
                if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
                    return Err(param_err!("discrete probabilities must lie in [0, 1]"));
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(param_err!("discrete probabilities sum to {total}, not 1"));
                }
            }
            Dist::ExpScaled { mantissa, exponent } => {
                mantissa.validate()?;
                exponent.validate()?;
            }
        }
        Ok(())
    }

    /// Draw one value. Parameters are validated on every call; use
    /// [`Dist::sample_unchecked`] in hot loops after a single `validate`.
    pub fn sample(&self, rng: &mut Rng) -> Result<f64> {
        self.validate()?;
        Ok(self.sample_unchecked(rng))
    }

    pub fn sample_unchecked(&self, rng: &mut Rng) -> f64 {
        match self {
            Dist::Normal { mean, std } => rng.normal(*mean, *std),
            Dist::Uniform { lo, hi } => {
                if lo == hi {
                    *lo
                } else {
                    rng.uniform_in(*lo, *hi)
                }
            }
            Dist::IntUniform { lo, hi } => rng.int_inclusive(*lo, *hi) as f64,
            Dist::Discrete { values, probs } => {
                let u = rng.uniform();
                let mut acc = 0.0;
                for (v, p) in values.iter().zip(probs) {
                    acc += p;
                    if u < acc {
                        return *v;
                    }
                }
                // rounding left a sliver above the last cumulative value
                *values.last().expect("validated non-empty")
            }
            Dist::ExpScaled { mantissa, exponent } => {
                let a = mantissa.sample_unchecked(rng);
                let b = exponent.sample_unchecked(rng);
                a * 10f64.powf(b)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_cases() {
        let mut rng = Rng::new(0);
        assert_eq!(Dist::uniform(2.0, 2.0).sample(&mut rng).unwrap(), 2.0);
        assert_eq!(
            Dist::discrete(vec![5.0], vec![1.0])
                .sample(&mut rng)
                .unwrap(),
            5.0
        );
        let v = Dist::exp_scaled(Dist::uniform(1.0, 1.0), Dist::int_uniform(3, 3))
            .sample(&mut rng)
            .unwrap();
        assert_eq!(v, 1000.0);
    }

    #[test]
    fn rejects_invalid_parameters() {
        let mut rng = Rng::new(0);
        assert!(Dist::uniform(3.0, 1.0).sample(&mut rng).is_err());
        assert!(Dist::int_uniform(3, 1).sample(&mut rng).is_err());
        assert!(Dist::discrete(vec![1.0, 2.0], vec![0.5, 0.4])
            .sample(&mut rng)
            .is_err());
        assert!(Dist::discrete(vec![1.0], vec![1.5])
            .sample(&mut rng)
            .is_err());
        assert!(Dist::normal(0.0, -1.0).sample(&mut rng).is_err());
        let nested = Dist::exp_scaled(Dist::uniform(1.0, 0.0), Dist::int_uniform(0, 1));
        assert!(nested.sample(&mut rng).is_err());
    }

    #[test]
    fn int_uniform_is_inclusive() {
        let mut rng = Rng::new(11);
        let d = Dist::int_uniform(0, 10);
        let mut seen = [false; 11];
        for _ in 0..5_000 {
            let v = d.sample_unchecked(&mut rng);
            assert_eq!(v, v.trunc());
            seen[v as usize] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn normal_moments_within_three_standard_errors() {
        let mut rng = Rng::new(5);
        let (mu, sigma) = (2.5, 3.0);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| rng.normal(mu, sigma)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let std = var.sqrt();
        let se_mean = sigma / (n as f64).sqrt();
        let se_std = sigma / (2.0 * (n as f64 - 1.0)).sqrt();
        assert!((mean - mu).abs() < 3.0 * se_mean, "mean {mean}");
        assert!((std - sigma).abs() < 3.0 * se_std, "std {std}");
    }

    #[test]
    fn exp_scaled_range() {
        let mut rng = Rng::new(8);
        let d = Dist::exp_scaled(Dist::uniform(1.0, 10.0), Dist::int_uniform(-3, 1));
        for _ in 0..20_000 {
            let v = d.sample_unchecked(&mut rng);
            assert!((1e-3..1e2).contains(&v), "{v}");
        }
    }

    #[test]
    fn discrete_frequencies() {
        let mut rng = Rng::new(2);
        let d = Dist::discrete(vec![-1.0, 0.0, 1.0], vec![0.2, 0.5, 0.3]);
        let n = 50_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            counts[(d.sample_unchecked(&mut rng) + 1.0) as usize] += 1;
        }
        for (c, p) in counts.iter().zip([0.2, 0.5, 0.3]) {
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!((*c as f64 / n as f64 - p).abs() < 4.0 * se);
        }
    }
}
