//! Small arithmetic expression language for coefficient functions of `p`.
//!
//! Grammar: `+ - * / ^`, unary minus, parentheses, numeric literals,
//! the constants `pi` and `e`, named parameters, the variable `p`, and the
//! functions `exp`, `log`, `sqrt`, `sin`, `cos`, `abs`.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sqrt,
    Sin,
    Cos,
    Abs,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => Func::Exp,
            "log" | "ln" => Func::Log,
            "sqrt" => Func::Sqrt,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Func::Exp => x.exp(),
            Func::Log => x.ln(),
            Func::Sqrt => x.sqrt(),
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Abs => x.abs(),
        }
    }
}

/// Parsed expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    /// Parses `src` with no named parameters.
    pub fn parse(src: &str) -> Result<Self> {
        Self::parse_with(src, &BTreeMap::new())
    }

    /// Parses `src`, substituting named parameters by their values.
    pub fn parse_with(src: &str, params: &BTreeMap<String, f64>) -> Result<Self> {
        let tokens = lex(src)?;
        let mut parser = Parser { tokens, pos: 0, params, len: src.len() };
        let e = parser.expr()?;
        if let Some((tok, off)) = parser.tokens.get(parser.pos) {
            return Err(Error::Parse { message: format!("unexpected token {tok}"), offset: *off });
        }
        Ok(e)
    }

    pub fn eval(&self, p: f64) -> f64 {
        match self {
            Expr::Num(x) => *x,
            Expr::Var => p,
            Expr::Neg(a) => -a.eval(p),
            Expr::Add(a, b) => a.eval(p) + b.eval(p),
            Expr::Sub(a, b) => a.eval(p) - b.eval(p),
            Expr::Mul(a, b) => a.eval(p) * b.eval(p),
            Expr::Div(a, b) => a.eval(p) / b.eval(p),
            Expr::Pow(a, b) => {
                let base = a.eval(p);
                match **b {
                    Expr::Num(k) if k.fract() == 0.0 && k.abs() < 64.0 => base.powi(k as i32),
                    _ => base.powf(b.eval(p)),
                }
            }
            Expr::Call(f, a) => f.apply(a.eval(p)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(x) => write!(f, "{x}"),
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Op(c) => write!(f, "`{c}`"),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < bytes.len() && ((bytes[i] as char).is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text = &src[start..i];
            let x: f64 = text.parse().map_err(|_| Error::Parse {
                message: format!("bad number `{text}`"),
                offset: start,
            })?;
            out.push((Tok::Num(x), start));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), start));
        } else if "+-*/^()".contains(c) {
            out.push((Tok::Op(c), i));
            i += 1;
        } else {
            return Err(Error::Parse { message: format!("unexpected character `{c}`"), offset: i });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<(Tok, usize)>,
    pos: usize,
    params: &'a BTreeMap<String, f64>,
    len: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.0)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.len, |t| t.1)
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek() == Some(&Tok::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    // right associative; binds tighter than unary minus on its left
    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.eat('^') {
            let exp = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let off = self.offset();
        let tok = self.tokens.get(self.pos).map(|t| t.0.clone());
        self.pos += 1;
        match tok {
            Some(Tok::Num(x)) => Ok(Expr::Num(x)),
            Some(Tok::Op('(')) => {
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(Error::Parse { message: "expected `)`".into(), offset: self.offset() });
                }
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                if let Some(f) = Func::from_name(&name) {
                    if !self.eat('(') {
                        return Err(Error::Parse {
                            message: format!("expected `(` after `{name}`"),
                            offset: self.offset(),
                        });
                    }
                    let arg = self.expr()?;
                    if !self.eat(')') {
                        return Err(Error::Parse { message: "expected `)`".into(), offset: self.offset() });
                    }
                    return Ok(Expr::Call(f, Box::new(arg)));
                }
                match name.as_str() {
                    "p" => Ok(Expr::Var),
                    "pi" => Ok(Expr::Num(std::f64::consts::PI)),
                    "e" => Ok(Expr::Num(std::f64::consts::E)),
                    _ => match self.params.get(&name) {
                        Some(&x) => Ok(Expr::Num(x)),
                        None => Err(Error::Parse { message: format!("unknown identifier `{name}`"), offset: off }),
                    },
                }
            }
            Some(t) => Err(Error::Parse { message: format!("unexpected token {t}"), offset: off }),
            None => Err(Error::Parse { message: "unexpected end of input".into(), offset: off }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_and_associativity() {
        let e = Expr::parse("1 + 2 * 3 ^ 2").unwrap();
        assert_eq!(e.eval(0.0), 19.0);
        let e = Expr::parse("2 ^ 3 ^ 2").unwrap();
        assert_eq!(e.eval(0.0), 512.0);
        let e = Expr::parse("-p^2").unwrap();
        assert_eq!(e.eval(3.0), -9.0);
        let e = Expr::parse("8 / 4 / 2").unwrap();
        assert_eq!(e.eval(0.0), 1.0);
    }

    #[test]
    fn wright_fisher_coefficients() {
        let v = Expr::parse("p*(1-p)").unwrap();
        assert!((v.eval(0.25) - 0.1875).abs() < 1e-15);
        let mut params = BTreeMap::new();
        params.insert("mu0".to_string(), 0.3);
        params.insert("mu1".to_string(), 0.7);
        let mu = Expr::parse_with("mu0*(1-p) - mu1*p", &params).unwrap();
        assert!((mu.eval(0.5) - (-0.2)).abs() < 1e-15);
    }

    #[test]
    fn functions_and_constants() {
        let e = Expr::parse("exp(log(2)) + sqrt(4) + cos(pi) + 1e-1").unwrap();
        assert!((e.eval(0.0) - (2.0 + 2.0 - 1.0 + 0.1)).abs() < 1e-14);
        assert!((Expr::parse("e").unwrap().eval(0.0) - std::f64::consts::E).abs() < 1e-15);
    }

    #[test]
    fn errors_carry_offsets() {
        match Expr::parse("p + q") {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("{other:?}"),
        }
        assert!(Expr::parse("(p + 1").is_err());
        assert!(Expr::parse("p $ 1").is_err());
        assert!(Expr::parse("exp p").is_err());
        assert!(Expr::parse("").is_err());
    }
}
