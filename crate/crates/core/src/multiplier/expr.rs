//! A small arithmetic expression language for custom symbols.
//!
//! Grammar: `+ - * / ^`, parentheses, the variable `r`, the constants `e`
//! and `pi`, and the functions `log` (natural), `exp`, `sin`, `cos`,
//! `sqrt`. Expressions are evaluated over truncated Taylor series, so all
//! supported derivative orders are analytic.

use crate::taylor::Jet;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Var,
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Neg(Box<Node>),
    Call(Func, Box<Node>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Func {
    Log,
    Exp,
    Sin,
    Cos,
    Sqrt,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Node,
    source: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn tokenize(src: &str) -> Result<Vec<Tok>> {
    let mut out = Vec::new();
    let bytes: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            ' ' | '\t' | '\n' => i += 1,
            '+' => {
                out.push(Tok::Plus);
                i += 1;
            }
            '-' => {
                out.push(Tok::Minus);
                i += 1;
            }
            '*' => {
                out.push(Tok::Star);
                i += 1;
            }
            '/' => {
                out.push(Tok::Slash);
                i += 1;
            }
            '^' => {
                out.push(Tok::Caret);
                i += 1;
            }
            '(' => {
                out.push(Tok::LParen);
                i += 1;
            }
            ')' => {
                out.push(Tok::RParen);
                i += 1;
            }
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_digit()
                        || bytes[i] == '.'
                        || bytes[i] == 'e'
                        || bytes[i] == 'E'
                        || ((bytes[i] == '+' || bytes[i] == '-')
                            && i > start
                            && (bytes[i - 1] == 'e' || bytes[i - 1] == 'E')))
                {
                    i += 1;
                }
                let s: String = bytes[start..i].iter().collect();
                let v: f64 = s
                    .parse()
                    .map_err(|_| Error::Expr(format!("bad number literal '{s}'")))?;
                out.push(Tok::Num(v));
            }
            c if c.is_ascii_alphabetic() => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == '_') {
                    i += 1;
                }
                out.push(Tok::Ident(bytes[start..i].iter().collect()));
            }
            other => return Err(Error::Expr(format!("unexpected character '{other}'"))),
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, t: Tok) -> Result<()> {
        match self.next() {
            Some(found) if found == t => Ok(()),
            found => Err(Error::Expr(format!("expected {t:?}, found {found:?}"))),
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.next();
                    lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Tok::Minus) => {
                    self.next();
                    lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.next();
                    lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some(Tok::Slash) => {
                    self.next();
                    lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if matches!(self.peek(), Some(Tok::Minus)) {
            self.next();
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if matches!(self.peek(), Some(Tok::Caret)) {
            self.next();
            // right-associative, unary minus allowed in the exponent
            let exp = self.unary()?;
            return Ok(Node::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        match self.next() {
            Some(Tok::Num(v)) => Ok(Node::Num(v)),
            Some(Tok::LParen) => {
                let inner = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Some(Tok::Ident(name)) => match name.as_str() {
                "r" => Ok(Node::Var),
                "e" => Ok(Node::Num(std::f64::consts::E)),
                "pi" => Ok(Node::Num(std::f64::consts::PI)),
                "log" | "ln" | "exp" | "sin" | "cos" | "sqrt" => {
                    self.expect(Tok::LParen)?;
                    let arg = self.expr()?;
                    self.expect(Tok::RParen)?;
                    let f = match name.as_str() {
                        "log" | "ln" => Func::Log,
                        "exp" => Func::Exp,
                        "sin" => Func::Sin,
                        "cos" => Func::Cos,
                        "sqrt" => Func::Sqrt,
                        _ => unreachable!(),
                    };
                    Ok(Node::Call(f, Box::new(arg)))
                }
                other => Err(Error::Expr(format!("unknown identifier '{other}'"))),
            },
            found => Err(Error::Expr(format!("unexpected token {found:?}"))),
        }
    }
}

fn eval_node(node: &Node, x: &Jet) -> Jet {
    let order = x.order();
    match node {
        Node::Num(v) => Jet::constant(*v, order),
        Node::Var => x.clone(),
        Node::Add(a, b) => eval_node(a, x).add(&eval_node(b, x)),
        Node::Sub(a, b) => eval_node(a, x).sub(&eval_node(b, x)),
        Node::Mul(a, b) => eval_node(a, x).mul(&eval_node(b, x)),
        Node::Div(a, b) => eval_node(a, x).div(&eval_node(b, x)),
        Node::Pow(a, b) => {
            let base = eval_node(a, x);
            let expo = eval_node(b, x);
            if expo.c[1..].iter().all(|&c| c == 0.0) {
                base.powf(expo.c[0])
            } else {
                base.ln().mul(&expo).exp()
            }
        }
        Node::Neg(a) => eval_node(a, x).scale(-1.0),
        Node::Call(f, a) => {
            let arg = eval_node(a, x);
            match f {
                Func::Log => arg.ln(),
                Func::Exp => arg.exp(),
                Func::Sin => arg.sin_cos().0,
                Func::Cos => arg.sin_cos().1,
                Func::Sqrt => arg.sqrt(),
            }
        }
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let toks = tokenize(src)?;
        let mut p = Parser { toks, pos: 0 };
        let root = p.expr()?;
        if p.pos != p.toks.len() {
            return Err(Error::Expr(format!(
                "trailing input after position {}",
                p.pos
            )));
        }
        let expr = Expr {
            root,
            source: src.to_string(),
        };
        // must at least evaluate at a generic point
        let probe = expr.eval_jet(&Jet::var(1.0, 1));
        if !probe.c[0].is_finite() {
            return Err(Error::Expr(format!("expression not finite at r = 1: {src}")));
        }
        Ok(expr)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn eval_jet(&self, x: &Jet) -> Jet {
        eval_node(&self.root, x)
    }

    /// m(0⁺): direct evaluation at 0 when defined, otherwise an Aitken
    /// extrapolation along r -> 0.
    pub fn limit_at_zero(&self) -> Result<f64> {
        let at0 = self.eval_jet(&Jet::var(0.0, 0)).c[0];
        if at0.is_finite() {
            return Ok(at0);
        }
        let seq: Vec<f64> = (4..12)
            .map(|k| self.eval_jet(&Jet::var(10f64.powi(-k), 0)).c[0])
            .collect();
        if seq.iter().any(|v| !v.is_finite()) {
            return Err(Error::Expr("m(0+) limit does not exist".into()));
        }
        let (v, _) = crate::quad::aitken(&seq, 3);
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn parse_and_eval() {
        let e = Expr::parse("log(log(e^2 + 2*r + sin(r)))").unwrap();
        let v = e.eval_jet(&Jet::var(3.0, 2));
        let inner: f64 = std::f64::consts::E.powi(2) + 6.0 + 3.0f64.sin();
        assert_relative_eq!(v.c[0], inner.ln().ln(), max_relative = 1e-14);
        // first derivative
        let d_manual = (2.0 + 3.0f64.cos()) / (inner * inner.ln());
        assert_relative_eq!(v.derivative(1), d_manual, max_relative = 1e-13);
    }

    #[test]
    fn power_with_variable_exponent() {
        let e = Expr::parse("r^(r/2)").unwrap();
        let v = e.eval_jet(&Jet::var(2.0, 1));
        assert_relative_eq!(v.c[0], 2.0, max_relative = 1e-14);
    }

    #[test]
    fn limit_at_zero() {
        assert_eq!(Expr::parse("log(1+r)").unwrap().limit_at_zero().unwrap(), 0.0);
        let e = Expr::parse("1/(1+r^2)").unwrap();
        assert_eq!(e.limit_at_zero().unwrap(), 1.0);
    }

    #[test]
    fn rejects_garbage() {
        assert!(Expr::parse("2 +* r").is_err());
        assert!(Expr::parse("foo(r)").is_err());
        assert!(Expr::parse("(r").is_err());
        assert!(Expr::parse("r) + 1").is_err());
    }
}
