use super::ast::{ExprAst, Factor, Term};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
struct Pos {
    line: usize,
    column: usize,
}

#[derive(Debug)]
enum Sexp {
    Atom(String, Pos),
    List(Vec<Sexp>, Pos),
}

impl Sexp {
    fn pos(&self) -> Pos {
        match self {
            Sexp::Atom(_, p) | Sexp::List(_, p) => *p,
        }
    }
}

fn err(pos: Pos, message: impl Into<String>) -> Error {
    Error::Parse {
        line: pos.line,
        column: pos.column,
        message: message.into(),
    }
}

struct Reader<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    pos: Pos,
}

impl Reader<'_> {
    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.pos.line += 1;
            self.pos.column = 1;
        } else {
            self.pos.column += 1;
        }
        Some(c)
    }

    fn skip_blank(&mut self) {
        while let Some(&c) = self.chars.peek() {
            if c == ';' {
                while self.chars.peek().is_some_and(|&c| c != '\n') {
                    self.bump();
                }
            } else if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    fn read(&mut self) -> Result<Sexp> {
        self.skip_blank();
        let start = self.pos;
        match self.chars.peek() {
            None => Err(err(start, "unexpected end of input")),
            Some(')') => Err(err(start, "unexpected ')'")),
            Some('(') => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_blank();
                    match self.chars.peek() {
                        None => return Err(err(start, "unclosed '('")),
                        Some(')') => {
                            self.bump();
                            return Ok(Sexp::List(items, start));
                        }
                        Some(_) => items.push(self.read()?),
                    }
                }
            }
            Some(_) => {
                let mut atom = String::new();
                while let Some(&c) = self.chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    atom.push(c);
                    self.bump();
                }
                Ok(Sexp::Atom(atom, start))
            }
        }
    }
}

/// Parses the prefix s-expression form of an expression.
///
/// ```text
/// x1 | 2.5 | (const c) | (lin c1 e1 c2 e2 … [bias]) | (exp e) | (log e)
/// (pow e p) | (prod (pow e p) …) | (sum (term a (pow e p) …) …)
/// ```
///
/// Variables are 1-based in text. `;` starts a comment.
pub fn parse_expr(text: &str) -> Result<ExprAst> {
    let mut reader = Reader {
        chars: text.chars().peekable(),
        pos: Pos { line: 1, column: 1 },
    };
    let sexp = reader.read()?;
    reader.skip_blank();
    if reader.chars.peek().is_some() {
        return Err(err(reader.pos, "trailing input after expression"));
    }
    to_expr(&sexp)
}

fn number(s: &Sexp) -> Result<f64> {
    match s {
        Sexp::Atom(a, pos) => match a.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            Ok(_) => Err(err(*pos, format!("non-finite number '{a}'"))),
            Err(_) => Err(err(*pos, format!("expected a number, found '{a}'"))),
        },
        Sexp::List(_, pos) => Err(err(*pos, "expected a number, found a list")),
    }
}

fn variable(a: &str) -> Option<usize> {
    let digits = a.strip_prefix('x')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    match digits.parse::<usize>() {
        Ok(i) if i >= 1 => Some(i - 1),
        _ => None,
    }
}

fn arity(head: &str, args: &[Sexp], n: usize, pos: Pos) -> Result<()> {
    if args.len() == n {
        Ok(())
    } else {
        Err(err(
            pos,
            format!("'{head}' takes {n} argument(s), found {}", args.len()),
        ))
    }
}

fn to_expr(s: &Sexp) -> Result<ExprAst> {
    let (items, pos) = match s {
        Sexp::Atom(a, pos) => {
            if let Some(i) = variable(a) {
                return Ok(ExprAst::Var(i));
            }
            return number(s)
                .map(ExprAst::Const)
                .map_err(|_| err(*pos, format!("unknown atom '{a}'")));
        }
        Sexp::List(items, pos) => (items, *pos),
    };
    let (head, args) = match items.split_first() {
        Some((Sexp::Atom(h, _), rest)) => (h.as_str(), rest),
        Some((other, _)) => return Err(err(other.pos(), "expected an operator name")),
        None => return Err(err(pos, "empty list")),
    };
    match head {
        "const" => {
            arity(head, args, 1, pos)?;
            Ok(ExprAst::Const(number(&args[0])?))
        }
        "exp" | "log" => {
            arity(head, args, 1, pos)?;
            let child = to_expr(&args[0])?;
            Ok(if head == "exp" {
                ExprAst::exp(child)
            } else {
                ExprAst::log(child)
            })
        }
        "lin" => {
            let (pairs, bias) = if args.len() % 2 == 1 {
                (&args[..args.len() - 1], number(&args[args.len() - 1])?)
            } else {
                (args, 0.0)
            };
            let mut coeffs = Vec::with_capacity(pairs.len() / 2);
            let mut terms = Vec::with_capacity(pairs.len() / 2);
            for pair in pairs.chunks(2) {
                coeffs.push(number(&pair[0])?);
                terms.push(to_expr(&pair[1])?);
            }
            Ok(ExprAst::Lin {
                coeffs,
                terms,
                bias,
            })
        }
        "pow" => Ok(ExprAst::PowerProduct(vec![factor(s)?])),
        "prod" => Ok(ExprAst::PowerProduct(
            args.iter().map(factor).collect::<Result<_>>()?,
        )),
        "sum" => {
            let terms = args.iter().map(term).collect::<Result<_>>()?;
            Ok(ExprAst::SumOfProducts(terms))
        }
        other => Err(err(pos, format!("unknown operator '{other}'"))),
    }
}

/// `(pow e p)`, or any other expression as a first power.
fn factor(s: &Sexp) -> Result<Factor> {
    if let Sexp::List(items, pos) = s {
        if let Some(Sexp::Atom(h, _)) = items.first() {
            if h == "pow" {
                arity("pow", &items[1..], 2, *pos)?;
                return Ok(Factor::new(to_expr(&items[1])?, number(&items[2])?));
            }
        }
    }
    Ok(Factor::new(to_expr(s)?, 1.0))
}

fn term(s: &Sexp) -> Result<Term> {
    match s {
        Sexp::List(items, pos) => match items.split_first() {
            Some((Sexp::Atom(h, _), rest)) if h == "term" => {
                let (coeff, factors) = rest
                    .split_first()
                    .ok_or_else(|| err(*pos, "'term' needs a coefficient"))?;
                Ok(Term::new(
                    number(coeff)?,
                    factors.iter().map(factor).collect::<Result<_>>()?,
                ))
            }
            _ => Err(err(*pos, "expected (term coeff factor…)")),
        },
        Sexp::Atom(_, pos) => Err(err(*pos, "expected (term coeff factor…)")),
    }
}
