use std::fmt;

/// One factor `base^exponent` of a power product.
#[derive(Clone, Debug, PartialEq)]
pub struct Factor {
    pub base: ExprAst,
    pub exponent: f64,
}

/// `coeff · Π factors`. No factors means the constant `coeff`.
#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub coeff: f64,
    pub factors: Vec<Factor>,
}

/// Symbolic expression over variables `x1, x2, …` (stored 0-based).
#[derive(Clone, Debug, PartialEq)]
pub enum ExprAst {
    Var(usize),
    Const(f64),
    /// `Σ coeffs[k]·terms[k] + bias`
    Lin {
        coeffs: Vec<f64>,
        terms: Vec<ExprAst>,
        bias: f64,
    },
    Exp(Box<ExprAst>),
    Log(Box<ExprAst>),
    PowerProduct(Vec<Factor>),
    SumOfProducts(Vec<Term>),
}

impl Factor {
    pub fn new(base: ExprAst, exponent: f64) -> Self {
        Self { base, exponent }
    }
}

impl Term {
    pub fn new(coeff: f64, factors: Vec<Factor>) -> Self {
        Self { coeff, factors }
    }
}

impl ExprAst {
    pub fn var(i: usize) -> Self {
        ExprAst::Var(i)
    }

    pub fn lin(pairs: Vec<(f64, ExprAst)>, bias: f64) -> Self {
        let (coeffs, terms) = pairs.into_iter().unzip();
        ExprAst::Lin {
            coeffs,
            terms,
            bias,
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn exp(child: ExprAst) -> Self {
        ExprAst::Exp(Box::new(child))
    }

    pub fn log(child: ExprAst) -> Self {
        ExprAst::Log(Box::new(child))
    }

    /// Number of variables the expression refers to: highest index + 1.
    pub fn num_vars(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |e| {
            if let ExprAst::Var(i) = e {
                n = n.max(i + 1);
            }
        });
        n
    }

    /// Levels in the tree; a leaf has depth 1.
    pub fn depth(&self) -> usize {
        1 + self.children().map(ExprAst::depth).max().unwrap_or(0)
    }

    /// Nesting levels of the s-expression text, atoms included:
    /// `x1` is 1, `(log x1)` is 2, `(sum (term 2 (pow x1 3)))` is 4.
    pub fn sexpr_depth(&self) -> usize {
        let factors = |fs: &[Factor]| {
            fs.iter()
                .map(|f| 1 + f.base.sexpr_depth())
                .max()
                .unwrap_or(0)
        };
        match self {
            ExprAst::Var(_) => 1,
            ExprAst::Const(_) => 2,
            ExprAst::Lin { terms, .. } => {
                1 + terms
                    .iter()
                    .map(ExprAst::sexpr_depth)
                    .max()
                    .unwrap_or(0)
                    .max(1)
            }
            ExprAst::Exp(c) | ExprAst::Log(c) => 1 + c.sexpr_depth(),
            ExprAst::PowerProduct(fs) => 1 + factors(fs).max(1),
            ExprAst::SumOfProducts(ts) => {
                1 + ts
                    .iter()
                    .map(|t| 1 + factors(&t.factors).max(1))
                    .max()
                    .unwrap_or(0)
            }
        }
    }

    /// Direct sub-expressions, in order.
    pub fn children(&self) -> Box<dyn Iterator<Item = &ExprAst> + '_> {
        match self {
            ExprAst::Var(_) | ExprAst::Const(_) => Box::new(std::iter::empty()),
            ExprAst::Lin { terms, .. } => Box::new(terms.iter()),
            ExprAst::Exp(c) | ExprAst::Log(c) => Box::new(std::iter::once(c.as_ref())),
            ExprAst::PowerProduct(fs) => Box::new(fs.iter().map(|f| &f.base)),
            ExprAst::SumOfProducts(ts) => {
                Box::new(ts.iter().flat_map(|t| t.factors.iter().map(|f| &f.base)))
            }
        }
    }

    fn visit(&self, f: &mut impl FnMut(&ExprAst)) {
        f(self);
        for c in self.children() {
            c.visit(f);
        }
    }

    /// Direct recursive evaluation in `f64`, the reference the compiled
    /// networks are checked against. Powers use `powf`, not exp/log.
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            ExprAst::Var(i) => x[*i],
            ExprAst::Const(c) => *c,
            ExprAst::Lin {
                coeffs,
                terms,
                bias,
            } => coeffs
                .iter()
                .zip(terms)
                .fold(*bias, |acc, (c, t)| acc + c * t.eval(x)),
            ExprAst::Exp(c) => c.eval(x).exp(),
            ExprAst::Log(c) => c.eval(x).ln(),
            ExprAst::PowerProduct(fs) => eval_product(fs, x),
            ExprAst::SumOfProducts(ts) => ts
                .iter()
                .map(|t| t.coeff * eval_product(&t.factors, x))
                .sum(),
        }
    }
}

fn eval_product(factors: &[Factor], x: &[f64]) -> f64 {
    factors
        .iter()
        .map(|f| f.base.eval(x).powf(f.exponent))
        .product()
}

fn write_factor(f: &mut fmt::Formatter<'_>, factor: &Factor) -> fmt::Result {
    write!(f, " (pow {} {})", factor.base, factor.exponent)
}

/// Prefix s-expression form, accepted back by [`super::parse_expr`].
impl fmt::Display for ExprAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExprAst::Var(i) => write!(f, "x{}", i + 1),
            ExprAst::Const(c) => write!(f, "(const {c})"),
            ExprAst::Lin {
                coeffs,
                terms,
                bias,
            } => {
                f.write_str("(lin")?;
                for (c, t) in coeffs.iter().zip(terms) {
                    write!(f, " {c} {t}")?;
                }
                if *bias != 0.0 {
                    write!(f, " {bias}")?;
                }
                f.write_str(")")
            }
            ExprAst::Exp(c) => write!(f, "(exp {c})"),
            ExprAst::Log(c) => write!(f, "(log {c})"),
            ExprAst::PowerProduct(fs) => {
                f.write_str("(prod")?;
                for factor in fs {
                    write_factor(f, factor)?;
                }
                f.write_str(")")
            }
            ExprAst::SumOfProducts(ts) => {
                f.write_str("(sum")?;
                for t in ts {
                    write!(f, " (term {}", t.coeff)?;
                    for factor in &t.factors {
                        write_factor(f, factor)?;
                    }
                    f.write_str(")")?;
                }
                f.write_str(")")
            }
        }
    }
}
