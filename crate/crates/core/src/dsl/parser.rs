use num_traits::ToPrimitive;

use super::{Expr, Func, FunctionAst, Literal, ParseError};
use crate::rational::parse_rational;

const MAX_DEPTH: usize = 200;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Number(String),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Number(n) => format!("number {n}"),
            Tok::Ident(i) => format!("identifier {i}"),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Star => "'*'".into(),
            Tok::Slash => "'/'".into(),
            Tok::Caret => "'^'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Comma => "','".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn syntax(offset: usize, expected: &[&str], found: String) -> ParseError {
    ParseError::Syntax {
        offset,
        expected: expected.iter().map(|s| (*s).to_owned()).collect(),
        found,
    }
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        let start = i;
        let tok = match b {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b',' => Tok::Comma,
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                out.push((start, Tok::Number(src[start..i].to_owned())));
                continue;
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((start, Tok::Ident(src[start..i].to_owned())));
                continue;
            }
            _ => {
                let found = src[start..].chars().next().map(|c| format!("{c:?}")).unwrap_or_default();
                return Err(syntax(start, &["expression"], found));
            }
        };
        out.push((start, tok));
        i += 1;
    }
    out.push((src.len(), Tok::End));
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    dim: usize,
    depth: usize,
}

const OPERAND: &[&str] = &["number", "identifier", "'('", "'-'"];

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].0
    }

    fn bump(&mut self) -> (usize, Tok) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, label: &str) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(syntax(self.offset(), &[label], self.peek().describe()))
        }
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(syntax(self.offset(), &["shallower nesting"], self.peek().describe()));
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.enter()?;
        let mut lhs = self.term()?;
        loop {
            let make: fn(Box<Expr>, Box<Expr>) -> Expr = match self.peek() {
                Tok::Plus => Expr::Add,
                Tok::Minus => Expr::Sub,
                _ => break,
            };
            self.bump();
            let rhs = self.term()?;
            lhs = make(Box::new(lhs), Box::new(rhs));
        }
        self.depth -= 1;
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let make: fn(Box<Expr>, Box<Expr>) -> Expr = match self.peek() {
                Tok::Star => Expr::Mul,
                Tok::Slash => Expr::Div,
                _ => break,
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = make(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            self.enter()?;
            let inner = self.unary()?;
            self.depth -= 1;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let negative = if *self.peek() == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        let at = self.offset();
        let exponent = match self.bump().1 {
            Tok::Number(text) if text.bytes().all(|b| b.is_ascii_digit()) => text
                .parse::<i32>()
                .ok()
                .filter(|e| *e <= 4096)
                .ok_or_else(|| syntax(at, &["integer exponent <= 4096"], text.clone()))?,
            other => return Err(syntax(at, &["integer exponent"], other.describe())),
        };
        Ok(Expr::Pow(Box::new(base), if negative { -exponent } else { exponent }))
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let at = self.offset();
        match self.bump().1 {
            Tok::Number(text) => {
                let value = parse_rational(&text).map_err(|_| syntax(at, &["number"], text.clone()))?;
                let approx = value.to_f64().filter(|v| v.is_finite()).ok_or_else(|| {
                    syntax(at, &["number within double range"], text.clone())
                })?;
                Ok(Expr::Lit(Literal { value, approx }))
            }
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                if let Some(func) = Func::from_name(&name) {
                    self.expect(Tok::LParen, "'('")?;
                    let mut args = vec![self.expr()?];
                    while *self.peek() == Tok::Comma {
                        self.bump();
                        args.push(self.expr()?);
                    }
                    self.expect(Tok::RParen, "')' or ','")?;
                    if args.len() != func.arity() {
                        return Err(ParseError::ArityMismatch {
                            offset: at,
                            name,
                            expected: func.arity(),
                            found: args.len(),
                        });
                    }
                    return Ok(Expr::Call(func, args));
                }
                let index = name
                    .strip_prefix('x')
                    .filter(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()) && !d.starts_with('0'))
                    .and_then(|d| d.parse::<usize>().ok())
                    .ok_or_else(|| ParseError::UnknownIdentifier {
                        offset: at,
                        name: name.clone(),
                    })?;
                if index > self.dim {
                    return Err(ParseError::DimensionExceeded {
                        offset: at,
                        index,
                        dim: self.dim,
                    });
                }
                Ok(Expr::Var(index - 1))
            }
            other => Err(syntax(at, OPERAND, other.describe())),
        }
    }
}

pub(super) fn parse(src: &str, dim: usize) -> Result<FunctionAst, ParseError> {
    if dim == 0 {
        return Err(ParseError::ZeroDimension);
    }
    let toks = lex(src)?;
    let mut p = Parser {
        toks,
        pos: 0,
        dim,
        depth: 0,
    };
    if *p.peek() == Tok::End {
        return Err(syntax(p.offset(), &["expression"], "end of input".into()));
    }
    let root = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(syntax(p.offset(), &["operator", "end of input"], p.peek().describe()));
    }
    Ok(FunctionAst { dim, root })
}
