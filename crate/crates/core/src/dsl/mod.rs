//! Closed-form test functions `f: Ω → ℝ₊` written as expression strings.
//!
//! Grammar (low to high precedence): `+ -`, `* /`, unary `-`, `^` with an
//! integer exponent, atoms. Atoms are decimal literals, variables
//! `x1..xd`, parenthesized expressions and calls to `abs`, `min`, `max`,
//! `sin`, `cos`, `exp`, `sqrt`. See `docs/dsl.md`.

mod parser;

use std::fmt;

use crate::rational::{format_rational, to_exact_decimal, Rational};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: expected {}, found {found}", expected.join(" or "))]
    Syntax {
        offset: usize,
        expected: Vec<String>,
        found: String,
    },
    #[error("unknown identifier {name:?} at byte {offset}")]
    UnknownIdentifier { offset: usize, name: String },
    #[error("{name} takes {expected} argument(s), got {found} (byte {offset})")]
    ArityMismatch {
        offset: usize,
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("variable x{index} exceeds dimension {dim} (byte {offset})")]
    DimensionExceeded { offset: usize, index: usize, dim: usize },
    #[error("dimension must be at least 1")]
    ZeroDimension,
}

impl ParseError {
    pub fn offset(&self) -> Option<usize> {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownIdentifier { offset, .. }
            | ParseError::ArityMismatch { offset, .. }
            | ParseError::DimensionExceeded { offset, .. } => Some(*offset),
            ParseError::ZeroDimension => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("f({point:?}) = {value} is negative; the function must map into [0, inf)")]
    NegativeValue { point: Vec<f64>, value: f64 },
    #[error("domain error at {point:?}: {reason}")]
    DomainError { point: Vec<f64>, reason: &'static str },
    #[error("point has {found} coordinates, function expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Abs,
    Min,
    Max,
    Sin,
    Cos,
    Exp,
    Sqrt,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "abs" => Func::Abs,
            "min" => Func::Min,
            "max" => Func::Max,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Abs => "abs",
            Func::Min => "min",
            Func::Max => "max",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }
}

/// A numeric literal kept exactly, with its nearest double cached.
#[derive(Debug, Clone, PartialEq)]
pub struct Literal {
    pub value: Rational,
    pub approx: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Lit(Literal),
    /// Zero-based coordinate index.
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionAst {
    dim: usize,
    root: Expr,
}

pub fn parse(expr: &str, dim: usize) -> Result<FunctionAst, ParseError> {
    parser::parse(expr, dim)
}

struct Fault(&'static str);

impl Expr {
    fn eval(&self, x: &[f64]) -> Result<f64, Fault> {
        let v = match self {
            Expr::Lit(l) => l.approx,
            Expr::Var(i) => x[*i],
            Expr::Neg(e) => -e.eval(x)?,
            Expr::Add(a, b) => a.eval(x)? + b.eval(x)?,
            Expr::Sub(a, b) => a.eval(x)? - b.eval(x)?,
            Expr::Mul(a, b) => a.eval(x)? * b.eval(x)?,
            Expr::Div(a, b) => {
                let num = a.eval(x)?;
                let den = b.eval(x)?;
                if den == 0.0 {
                    return Err(Fault("division by zero"));
                }
                num / den
            }
            Expr::Pow(base, e) => {
                let b = base.eval(x)?;
                if b == 0.0 && *e < 0 {
                    return Err(Fault("division by zero"));
                }
                b.powi(*e)
            }
            Expr::Call(f, args) => {
                let a = args[0].eval(x)?;
                match f {
                    Func::Abs => a.abs(),
                    Func::Min => a.min(args[1].eval(x)?),
                    Func::Max => a.max(args[1].eval(x)?),
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Exp => a.exp(),
                    Func::Sqrt => {
                        if a < 0.0 {
                            return Err(Fault("square root of a negative number"));
                        }
                        a.sqrt()
                    }
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Fault("non-finite intermediate value"))
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(..) => 3,
            Expr::Pow(..) => 4,
            Expr::Lit(l) if to_exact_decimal(&l.value).is_none() => 2,
            _ => 5,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let paren = self.precedence() < min;
        if paren {
            f.write_str("(")?;
        }
        match self {
            Expr::Lit(l) => match to_exact_decimal(&l.value) {
                Some(d) => f.write_str(&d)?,
                // Only reachable for literals built in code; re-parses as a quotient.
                None => f.write_str(&format_rational(&l.value))?,
            },
            Expr::Var(i) => write!(f, "x{}", i + 1)?,
            Expr::Neg(e) => {
                f.write_str("-")?;
                e.fmt_prec(f, 3)?;
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                a.fmt_prec(f, 1)?;
                f.write_str(if matches!(self, Expr::Add(..)) { " + " } else { " - " })?;
                b.fmt_prec(f, 2)?;
            }
            Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.fmt_prec(f, 2)?;
                f.write_str(if matches!(self, Expr::Mul(..)) { " * " } else { " / " })?;
                b.fmt_prec(f, 3)?;
            }
            Expr::Pow(base, e) => {
                base.fmt_prec(f, 5)?;
                write!(f, "^{e}")?;
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (k, a) in args.iter().enumerate() {
                    if k > 0 {
                        f.write_str(", ")?;
                    }
                    a.fmt_prec(f, 0)?;
                }
                f.write_str(")")?;
            }
        }
        if paren {
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl FunctionAst {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn root(&self) -> &Expr {
        &self.root
    }

    /// `f(point)`, rejecting negative results instead of clamping them.
    pub fn evaluate(&self, point: &[f64]) -> Result<f64, EvalError> {
        if point.len() != self.dim {
            return Err(EvalError::DimensionMismatch {
                expected: self.dim,
                found: point.len(),
            });
        }
        let v = self.root.eval(point).map_err(|Fault(reason)| EvalError::DomainError {
            point: point.to_vec(),
            reason,
        })?;
        if v < 0.0 {
            return Err(EvalError::NegativeValue {
                point: point.to_vec(),
                value: v,
            });
        }
        // Normalizes -0.0.
        Ok(v + 0.0)
    }
}

impl fmt::Display for FunctionAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt_prec(f, 0)
    }
}

pub fn evaluate(ast: &FunctionAst, point: &[f64]) -> Result<f64, EvalError> {
    ast.evaluate(point)
}
