use super::ast::{ExprAst, Factor, Term};
use super::bounds::Bounds;
use crate::error::{param_err, Result};
use crate::rng::Rng;

/// Random sums of power products over a box, `Σ aᵢ Π baseⱼ^pᵢⱼ`, where a base
/// is a variable or, while `nesting` allows, a nested sum of the same form.
///
/// With no nesting the text form is four levels deep:
/// `(sum (term a (pow x p)))`. Nested sums feed logarithms whose argument
/// range widens quickly, and the exp gadget loses about `e^(hi − lo)` ulps of
/// relative accuracy over an argument range `[lo, hi]`, so nested bases get
/// their own, narrower exponent range.
#[derive(Clone, Debug, PartialEq)]
pub struct RandomFamily {
    pub vars: usize,
    /// Levels of sums allowed inside bases.
    pub nesting: usize,
    pub max_terms: usize,
    pub max_factors: usize,
    pub exponent_range: (f64, f64),
    pub nested_exponent_range: (f64, f64),
    /// Coefficient magnitudes are drawn from this range.
    pub coeff_range: (f64, f64),
    /// Probability that a coefficient is negative.
    pub negative_coeff_prob: f64,
    /// Probability that a base is a nested sum when nesting allows.
    pub nest_prob: f64,
    pub domain: (f64, f64),
}

impl Default for RandomFamily {
    fn default() -> Self {
        Self {
            vars: 2,
            nesting: 0,
            max_terms: 5,
            max_factors: 3,
            exponent_range: (-3.0, 3.0),
            nested_exponent_range: (-1.0, 1.0),
            coeff_range: (0.5, 2.0),
            negative_coeff_prob: 0.0,
            nest_prob: 0.3,
            domain: (1.0, 10.0),
        }
    }
}

impl RandomFamily {
    pub fn bounds(&self) -> Result<Vec<Bounds>> {
        (0..self.vars)
            .map(|_| Bounds::new(self.domain.0, self.domain.1))
            .collect()
    }

    pub fn sample(&self, rng: &mut Rng) -> Result<ExprAst> {
        if self.vars == 0 || self.max_terms == 0 || self.max_factors == 0 {
            return Err(param_err!(
                "random family needs variables, terms and factors"
            ));
        }
        Ok(self.sum(self.nesting, rng, true))
    }

    fn sum(&self, nesting: usize, rng: &mut Rng, top: bool) -> ExprAst {
        let range = if top {
            self.exponent_range
        } else {
            self.nested_exponent_range
        };
        let k = 1 + rng.index(self.max_terms);
        let terms = (0..k)
            .map(|_| {
                let mut coeff = rng.uniform_in(self.coeff_range.0, self.coeff_range.1);
                // Nested sums feed a logarithm and must stay positive.
                if top && rng.uniform() < self.negative_coeff_prob {
                    coeff = -coeff;
                }
                let n_factors = 1 + rng.index(self.max_factors);
                let factors = (0..n_factors)
                    .map(|_| {
                        let base = if nesting > 0 && rng.uniform() < self.nest_prob {
                            self.sum(nesting - 1, rng, false)
                        } else {
                            ExprAst::Var(rng.index(self.vars))
                        };
                        let p = rng.uniform_in(range.0, range.1);
                        Factor::new(base, p)
                    })
                    .collect();
                Term::new(coeff, factors)
            })
            .collect();
        ExprAst::SumOfProducts(terms)
    }
}
