//! Recursive-descent parser and evaluator for user-supplied field
//! expressions over `q1`, `q2`, with `exp`, `sin`, `cos`, `sqrt`, the
//! constants `pi` and `i`, and numeric literals.
//!
//! The AST is symbolically differentiable, so custom models get exact
//! partial derivatives instead of finite differences.

use crate::{Error, Result, C64};
use std::fmt;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Sin,
    Cos,
    Sqrt,
}

#[derive(Debug, Clone)]
pub enum Expr {
    Num(C64),
    Q1,
    Q2,
    Add(Arc<Expr>, Arc<Expr>),
    Sub(Arc<Expr>, Arc<Expr>),
    Mul(Arc<Expr>, Arc<Expr>),
    Div(Arc<Expr>, Arc<Expr>),
    Neg(Arc<Expr>),
    /// Power with a constant exponent.
    Pow(Arc<Expr>, C64),
    Call(Func, Arc<Expr>),
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let mut p = Parser {
            src: src.as_bytes(),
            pos: 0,
        };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(Error::Parse {
                offset: p.pos,
                msg: "unexpected trailing input".into(),
            });
        }
        Ok(e)
    }

    pub fn eval(&self, q1: f64, q2: f64) -> C64 {
        match self {
            Expr::Num(c) => *c,
            Expr::Q1 => C64::new(q1, 0.0),
            Expr::Q2 => C64::new(q2, 0.0),
            Expr::Add(a, b) => a.eval(q1, q2) + b.eval(q1, q2),
            Expr::Sub(a, b) => a.eval(q1, q2) - b.eval(q1, q2),
            Expr::Mul(a, b) => a.eval(q1, q2) * b.eval(q1, q2),
            Expr::Div(a, b) => a.eval(q1, q2) / b.eval(q1, q2),
            Expr::Neg(a) => -a.eval(q1, q2),
            Expr::Pow(a, c) => {
                let base = a.eval(q1, q2);
                if c.im == 0.0 && c.re.fract() == 0.0 && c.re.abs() <= 64.0 {
                    base.powi(c.re as i32)
                } else {
                    base.powc(*c)
                }
            }
            Expr::Call(f, a) => {
                let v = a.eval(q1, q2);
                match f {
                    Func::Exp => v.exp(),
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Sqrt => v.sqrt(),
                }
            }
        }
    }

    /// Symbolic partial derivative with respect to `q1` (var = 0) or `q2` (var = 1).
    pub fn diff(&self, var: usize) -> Expr {
        match self {
            Expr::Num(_) => zero(),
            Expr::Q1 => {
                if var == 0 {
                    one()
                } else {
                    zero()
                }
            }
            Expr::Q2 => {
                if var == 1 {
                    one()
                } else {
                    zero()
                }
            }
            Expr::Add(a, b) => add(a.diff(var), b.diff(var)),
            Expr::Sub(a, b) => sub(a.diff(var), b.diff(var)),
            Expr::Mul(a, b) => add(
                mul(a.diff(var), (**b).clone()),
                mul((**a).clone(), b.diff(var)),
            ),
            Expr::Div(a, b) => {
                let num = sub(
                    mul(a.diff(var), (**b).clone()),
                    mul((**a).clone(), b.diff(var)),
                );
                Expr::Div(
                    Arc::new(num),
                    Arc::new(Expr::Pow(b.clone(), C64::new(2.0, 0.0))),
                )
            }
            Expr::Neg(a) => neg(a.diff(var)),
            Expr::Pow(a, c) => mul(
                mul(Expr::Num(*c), Expr::Pow(a.clone(), c - 1.0)),
                a.diff(var),
            ),
            Expr::Call(f, a) => {
                let inner = a.diff(var);
                let outer = match f {
                    Func::Exp => Expr::Call(Func::Exp, a.clone()),
                    Func::Sin => Expr::Call(Func::Cos, a.clone()),
                    Func::Cos => neg(Expr::Call(Func::Sin, a.clone())),
                    Func::Sqrt => Expr::Div(
                        Arc::new(Expr::Num(C64::new(0.5, 0.0))),
                        Arc::new(Expr::Call(Func::Sqrt, a.clone())),
                    ),
                };
                mul(outer, inner)
            }
        }
    }

    fn is_zero(&self) -> bool {
        matches!(self, Expr::Num(c) if c.re == 0.0 && c.im == 0.0)
    }

    fn is_one(&self) -> bool {
        matches!(self, Expr::Num(c) if c.re == 1.0 && c.im == 0.0)
    }
}

fn zero() -> Expr {
    Expr::Num(C64::new(0.0, 0.0))
}

fn one() -> Expr {
    Expr::Num(C64::new(1.0, 0.0))
}

fn add(a: Expr, b: Expr) -> Expr {
    if a.is_zero() {
        b
    } else if b.is_zero() {
        a
    } else {
        Expr::Add(Arc::new(a), Arc::new(b))
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    if b.is_zero() {
        a
    } else if a.is_zero() {
        neg(b)
    } else {
        Expr::Sub(Arc::new(a), Arc::new(b))
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    if a.is_zero() || b.is_zero() {
        zero()
    } else if a.is_one() {
        b
    } else if b.is_one() {
        a
    } else {
        Expr::Mul(Arc::new(a), Arc::new(b))
    }
}

fn neg(a: Expr) -> Expr {
    if a.is_zero() {
        a
    } else {
        Expr::Neg(Arc::new(a))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(c) => {
                if c.im == 0.0 {
                    write!(f, "{}", c.re)
                } else {
                    write!(f, "({}+{}i)", c.re, c.im)
                }
            }
            Expr::Q1 => write!(f, "q1"),
            Expr::Q2 => write!(f, "q2"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Pow(a, c) => write!(f, "({a}^{})", c.re),
            Expr::Call(func, a) => {
                let name = match func {
                    Func::Exp => "exp",
                    Func::Sin => "sin",
                    Func::Cos => "cos",
                    Func::Sqrt => "sqrt",
                };
                write!(f, "{name}({a})")
            }
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            offset: self.pos,
            msg: msg.into(),
        })
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    lhs = Expr::Add(Arc::new(lhs), Arc::new(self.term()?));
                }
                Some(b'-') => {
                    self.pos += 1;
                    lhs = Expr::Sub(Arc::new(lhs), Arc::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    lhs = Expr::Mul(Arc::new(lhs), Arc::new(self.unary()?));
                }
                Some(b'/') => {
                    self.pos += 1;
                    lhs = Expr::Div(Arc::new(lhs), Arc::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(Expr::Neg(Arc::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exp_pos = self.pos;
            let exponent = self.unary()?;
            // only constant exponents are supported (keeps differentiation exact)
            let c = match const_fold(&exponent) {
                Some(c) => c,
                None => {
                    self.pos = exp_pos;
                    return self.err("exponent must be a constant");
                }
            };
            return Ok(Expr::Pow(Arc::new(base), c));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return self.err("expected ')'");
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.ident(),
            _ => self.err("expected a number, identifier, or '('"),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() {
            let c = self.src[self.pos];
            if c.is_ascii_digit() || c == b'.' {
                self.pos += 1;
            } else if (c == b'e' || c == b'E')
                && self.pos > start
                && self
                    .src
                    .get(self.pos + 1)
                    .is_some_and(|&d| d.is_ascii_digit() || d == b'+' || d == b'-')
            {
                self.pos += 2;
            } else {
                break;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        match text.parse::<f64>() {
            Ok(v) => Ok(Expr::Num(C64::new(v, 0.0))),
            Err(_) => Err(Error::Parse {
                offset: start,
                msg: format!("invalid number literal '{text}'"),
            }),
        }
    }

    fn ident(&mut self) -> Result<Expr> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let func = match name {
            "q1" => return Ok(Expr::Q1),
            "q2" => return Ok(Expr::Q2),
            "i" => return Ok(Expr::Num(C64::new(0.0, 1.0))),
            "pi" => return Ok(Expr::Num(C64::new(std::f64::consts::PI, 0.0))),
            "exp" => Func::Exp,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sqrt" => Func::Sqrt,
            _ => {
                return Err(Error::Parse {
                    offset: start,
                    msg: format!("unknown identifier '{name}'"),
                })
            }
        };
        if self.peek() != Some(b'(') {
            return self.err(format!("expected '(' after '{name}'"));
        }
        self.pos += 1;
        let arg = self.expr()?;
        if self.peek() != Some(b')') {
            return self.err("expected ')'");
        }
        self.pos += 1;
        Ok(Expr::Call(func, Arc::new(arg)))
    }
}

/// Fold an expression with no `q1`/`q2` dependence to a constant.
fn const_fold(e: &Expr) -> Option<C64> {
    match e {
        Expr::Num(c) => Some(*c),
        Expr::Q1 | Expr::Q2 => None,
        Expr::Add(a, b) => Some(const_fold(a)? + const_fold(b)?),
        Expr::Sub(a, b) => Some(const_fold(a)? - const_fold(b)?),
        Expr::Mul(a, b) => Some(const_fold(a)? * const_fold(b)?),
        Expr::Div(a, b) => Some(const_fold(a)? / const_fold(b)?),
        Expr::Neg(a) => Some(-const_fold(a)?),
        Expr::Pow(a, c) => Some(const_fold(a)?.powc(*c)),
        Expr::Call(f, a) => {
            let v = const_fold(a)?;
            Some(match f {
                Func::Exp => v.exp(),
                Func::Sin => v.sin(),
                Func::Cos => v.cos(),
                Func::Sqrt => v.sqrt(),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::fd_partial_c;

    #[test]
    fn parse_and_eval_radial_well() {
        let e = Expr::parse("2 - exp(-(q1^2 + q2^2))").unwrap();
        let f = |q1: f64, q2: f64| 2.0 - (-(q1 * q1 + q2 * q2)).exp();
        for &(x, y) in &[(0.0, 0.0), (1.0, 0.5), (-0.3, 2.1)] {
            assert!((e.eval(x, y).re - f(x, y)).abs() < 1e-14);
            assert_eq!(e.eval(x, y).im, 0.0);
        }
    }

    #[test]
    fn parse_imaginary_potential() {
        let e = Expr::parse("i * (1 - exp(-(q1^2 + q2^2)))").unwrap();
        let v = e.eval(0.7, -0.2);
        assert!(v.re.abs() < 1e-15);
        assert!((v.im - (1.0 - (-(0.49 + 0.04f64)).exp())).abs() < 1e-14);
    }

    #[test]
    fn symbolic_derivatives_match_finite_differences() {
        let e = Expr::parse("sin(q1*q2) + exp(-(q1^2 + 0.5*q2^2)) / (2 + cos(q2))").unwrap();
        let eval = |x: f64, y: f64| e.eval(x, y);
        for var in 0..2 {
            let d = e.diff(var);
            let (a, b) = if var == 0 { (1, 0) } else { (0, 1) };
            for &(x, y) in &[(0.4, -0.8), (1.2, 0.3)] {
                let fd = fd_partial_c(&eval, a, b, x, y);
                assert!((d.eval(x, y) - fd).norm() < 1e-8);
            }
        }
        // second mixed derivative
        let d12 = e.diff(0).diff(1);
        let fd = fd_partial_c(&eval, 1, 1, 0.4, -0.8);
        assert!((d12.eval(0.4, -0.8) - fd).norm() < 1e-7);
    }

    #[test]
    fn rejects_garbage() {
        assert!(Expr::parse("q1 + ").is_err());
        assert!(Expr::parse("foo(q1)").is_err());
        assert!(Expr::parse("q1 ^ q2").is_err());
        assert!(Expr::parse("(q1").is_err());
    }
}
