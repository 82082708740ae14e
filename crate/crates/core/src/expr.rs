//! Coefficient expressions in `t` and `x`.
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?
//! atom  := number | 't' | 'x' | 'pi' | name '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! Functions: sin cos tan exp ln sqrt abs tanh sinh cosh atan min max.

use std::fmt;

use crate::error::{Error, Result};

const MAX_DEPTH: usize = 200;
const MAX_LEN: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
    Abs,
    Tanh,
    Sinh,
    Cosh,
    Atan,
    Min,
    Max,
}

impl Func {
    fn lookup(name: &str) -> Option<(Func, usize)> {
        Some(match name {
            "sin" => (Func::Sin, 1),
            "cos" => (Func::Cos, 1),
            "tan" => (Func::Tan, 1),
            "exp" => (Func::Exp, 1),
            "ln" | "log" => (Func::Ln, 1),
            "sqrt" => (Func::Sqrt, 1),
            "abs" => (Func::Abs, 1),
            "tanh" => (Func::Tanh, 1),
            "sinh" => (Func::Sinh, 1),
            "cosh" => (Func::Cosh, 1),
            "atan" => (Func::Atan, 1),
            "min" => (Func::Min, 2),
            "max" => (Func::Max, 2),
            _ => return None,
        })
    }

    fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            Func::Sin => a.sin(),
            Func::Cos => a.cos(),
            Func::Tan => a.tan(),
            Func::Exp => a.exp(),
            Func::Ln => a.ln(),
            Func::Sqrt => a.sqrt(),
            Func::Abs => a.abs(),
            Func::Tanh => a.tanh(),
            Func::Sinh => a.sinh(),
            Func::Cosh => a.cosh(),
            Func::Atan => a.atan(),
            Func::Min => a.min(b),
            Func::Max => a.max(b),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    T,
    X,
    Neg(Box<Node>),
    Bin(char, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

impl Node {
    fn eval(&self, t: f64, x: f64) -> f64 {
        match self {
            Node::Num(v) => *v,
            Node::T => t,
            Node::X => x,
            Node::Neg(a) => -a.eval(t, x),
            Node::Bin(op, a, b) => {
                let (a, b) = (a.eval(t, x), b.eval(t, x));
                match op {
                    '+' => a + b,
                    '-' => a - b,
                    '*' => a * b,
                    '/' => a / b,
                    _ => a.powf(b),
                }
            }
            Node::Call(f, args) => {
                let a = args[0].eval(t, x);
                let b = args.get(1).map_or(0.0, |n| n.eval(t, x));
                f.apply(a, b)
            }
        }
    }

    fn uses_x(&self) -> bool {
        match self {
            Node::X => true,
            Node::Num(_) | Node::T => false,
            Node::Neg(a) => a.uses_x(),
            Node::Bin(_, a, b) => a.uses_x() || b.uses_x(),
            Node::Call(_, args) => args.iter().any(Node::uses_x),
        }
    }
}

/// A parsed coefficient `(t, x) -> f64`.
#[derive(Clone, PartialEq)]
pub struct Expr {
    source: String,
    root: Node,
}

impl Expr {
    pub fn parse(source: &str) -> Result<Self> {
        if source.len() > MAX_LEN {
            return Err(Error::Expr { pos: MAX_LEN, msg: format!("expression longer than {MAX_LEN} bytes") });
        }
        let mut p = Parser { src: source.as_bytes(), pos: 0, depth: 0 };
        let root = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.err("unexpected trailing input"));
        }
        Ok(Self { source: source.to_string(), root })
    }

    pub fn constant(v: f64) -> Self {
        Self { source: format!("{v:?}"), root: Node::Num(v) }
    }

    #[inline]
    pub fn eval(&self, t: f64, x: f64) -> f64 {
        self.root.eval(t, x)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn depends_on_x(&self) -> bool {
        self.root.uses_x()
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({:?})", self.source)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl std::str::FromStr for Expr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    depth: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::Expr { pos: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn enter(&mut self) -> Result<()> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(self.err("expression nested too deeply"));
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Node> {
        self.enter()?;
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => '+',
                Some(b'-') => '-',
                _ => break,
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        self.depth -= 1;
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => '*',
                Some(b'/') => '/',
                _ => break,
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node> {
        self.enter()?;
        let node = if self.eat(b'-') {
            Node::Neg(Box::new(self.unary()?))
        } else if self.eat(b'+') {
            self.unary()?
        } else {
            let base = self.atom()?;
            if self.eat(b'^') {
                Node::Bin('^', Box::new(base), Box::new(self.unary()?))
            } else {
                base
            }
        };
        self.depth -= 1;
        Ok(node)
    }

    fn atom(&mut self) -> Result<Node> {
        match self.peek() {
            None => Err(self.err("unexpected end of expression")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.err("expected ')'"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.ident(),
            Some(_) => Err(self.err("unexpected character")),
        }
    }

    fn number(&mut self) -> Result<Node> {
        let start = self.pos;
        let s = self.src;
        let digits = |p: &mut usize| {
            while *p < s.len() && s[*p].is_ascii_digit() {
                *p += 1;
            }
        };
        let mut p = self.pos;
        digits(&mut p);
        if p < s.len() && s[p] == b'.' {
            p += 1;
            digits(&mut p);
        }
        if p < s.len() && (s[p] == b'e' || s[p] == b'E') {
            let mut q = p + 1;
            if q < s.len() && (s[q] == b'+' || s[q] == b'-') {
                q += 1;
            }
            if q < s.len() && s[q].is_ascii_digit() {
                p = q;
                digits(&mut p);
            }
        }
        let text = std::str::from_utf8(&s[start..p]).expect("ascii");
        let v: f64 = text.parse().map_err(|_| self.err("malformed number"))?;
        self.pos = p;
        Ok(Node::Num(v))
    }

    fn ident(&mut self) -> Result<Node> {
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        match name {
            "t" => return Ok(Node::T),
            "x" => return Ok(Node::X),
            "pi" => return Ok(Node::Num(std::f64::consts::PI)),
            _ => {}
        }
        let Some((func, arity)) = Func::lookup(name) else {
            self.pos = start;
            return Err(self.err(&format!("unknown identifier {name:?}")));
        };
        if !self.eat(b'(') {
            return Err(self.err(&format!("expected '(' after {name}")));
        }
        let mut args = vec![self.expr()?];
        while self.eat(b',') {
            args.push(self.expr()?);
        }
        if !self.eat(b')') {
            return Err(self.err("expected ')' after arguments"));
        }
        if args.len() != arity {
            return Err(self.err(&format!("{name} takes {arity} argument(s), got {}", args.len())));
        }
        Ok(Node::Call(func, args))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(s: &str, t: f64, x: f64) -> f64 {
        Expr::parse(s).unwrap().eval(t, x)
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("1 + 2 * 3", 0.0, 0.0), 7.0);
        assert_eq!(ev("2 ^ 3 ^ 2", 0.0, 0.0), 512.0);
        assert_eq!(ev("-2 ^ 2", 0.0, 0.0), -4.0);
        assert_eq!(ev("8 / 4 / 2", 0.0, 0.0), 1.0);
        assert_eq!(ev("2^-1", 0.0, 0.0), 0.5);
        assert_eq!(ev("(1 - 3) * x", 0.0, 2.0), -4.0);
    }

    #[test]
    fn variables_and_functions() {
        assert_eq!(ev("x/2", 0.0, 3.0), 1.5);
        assert_eq!(ev("sin(x)", 0.0, 0.7), 0.7f64.sin());
        assert_eq!(ev("max(t, abs(x))", 0.5, -2.0), 2.0);
        assert_eq!(ev("1.5e-1 + 2E1", 0.0, 0.0), 20.15);
        assert!((ev("cos(pi)", 0.0, 0.0) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn dependency_on_x() {
        assert!(Expr::parse("sin(x)").unwrap().depends_on_x());
        assert!(!Expr::parse("1 + t").unwrap().depends_on_x());
    }

    #[test]
    fn errors_carry_positions() {
        for (src, pos) in [("1 +", 3), ("foo(x)", 0), ("(1", 2), ("1 $ 2", 2), ("min(1)", 6)] {
            match Expr::parse(src) {
                Err(Error::Expr { pos: p, .. }) => assert_eq!(p, pos, "{src}"),
                other => panic!("{src}: {other:?}"),
            }
        }
    }

    #[test]
    fn deep_nesting_is_rejected_not_overflowed() {
        let deep = "(".repeat(5000) + "1" + &")".repeat(5000);
        assert!(Expr::parse(&deep[..MAX_LEN.min(deep.len())]).is_err());
        let neg = "-".repeat(1000) + "1";
        assert!(Expr::parse(&neg).is_err());
    }
}
