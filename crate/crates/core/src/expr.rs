//! Scale rules such as `n/2000`, `sqrt(n)/10` or `2.5`, evaluated at a node count.

use crate::error::{Error, Result};

/// A parsed arithmetic expression in the single variable `n`.
#[derive(Debug, Clone, PartialEq)]
pub enum ScaleRule {
    Const(f64),
    N,
    Neg(Box<ScaleRule>),
    Add(Box<ScaleRule>, Box<ScaleRule>),
    Sub(Box<ScaleRule>, Box<ScaleRule>),
    Mul(Box<ScaleRule>, Box<ScaleRule>),
    Div(Box<ScaleRule>, Box<ScaleRule>),
    Pow(Box<ScaleRule>, Box<ScaleRule>),
    Call(Func, Box<ScaleRule>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Ln,
    Exp,
}

impl ScaleRule {
    pub fn parse(src: &str) -> Result<Self> {
        let tokens = tokenize(src)?;
        let mut p = Parser { tokens, pos: 0 };
        let e = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(Error::Expression(format!("trailing input in `{src}`")));
        }
        Ok(e)
    }

    pub fn eval(&self, n: f64) -> f64 {
        use ScaleRule::*;
        match self {
            Const(c) => *c,
            N => n,
            Neg(a) => -a.eval(n),
            Add(a, b) => a.eval(n) + b.eval(n),
            Sub(a, b) => a.eval(n) - b.eval(n),
            Mul(a, b) => a.eval(n) * b.eval(n),
            Div(a, b) => a.eval(n) / b.eval(n),
            Pow(a, b) => a.eval(n).powf(b.eval(n)),
            Call(Func::Sqrt, a) => a.eval(n).sqrt(),
            Call(Func::Ln, a) => a.eval(n).ln(),
            Call(Func::Exp, a) => a.eval(n).exp(),
        }
    }

    /// Evaluates and checks the result is a finite positive scale.
    pub fn eval_scale(&self, n: usize) -> Result<f64> {
        let v = self.eval(n as f64);
        if v.is_finite() && v > 0.0 {
            Ok(v)
        } else {
            Err(Error::InvalidParameter(format!(
                "scale rule evaluates to {v} at n = {n}"
            )))
        }
    }
}

impl std::str::FromStr for ScaleRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

fn tokenize(src: &str) -> Result<Vec<Tok>> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            // exponent part, e.g. 1e-3
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let save = i;
                i += 1;
                if i < chars.len() && (chars[i] == '+' || chars[i] == '-') {
                    i += 1;
                }
                if i < chars.len() && chars[i].is_ascii_digit() {
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                } else {
                    i = save;
                }
            }
            let s: String = chars[start..i].iter().collect();
            let v = s
                .parse::<f64>()
                .map_err(|_| Error::Expression(format!("bad number `{s}`")))?;
            out.push(Tok::Num(v));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^()".contains(c) {
            out.push(Tok::Op(c));
            i += 1;
        } else {
            return Err(Error::Expression(format!("unexpected character `{c}`")));
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn eat_op(&mut self, op: char) -> bool {
        if self.peek() == Some(&Tok::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<ScaleRule> {
        let mut lhs = self.term()?;
        loop {
            if self.eat_op('+') {
                lhs = ScaleRule::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat_op('-') {
                lhs = ScaleRule::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<ScaleRule> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat_op('*') {
                lhs = ScaleRule::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat_op('/') {
                lhs = ScaleRule::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<ScaleRule> {
        if self.eat_op('-') {
            return Ok(ScaleRule::Neg(Box::new(self.unary()?)));
        }
        let base = self.atom()?;
        if self.eat_op('^') {
            // right associative
            let exp = self.unary()?;
            return Ok(ScaleRule::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<ScaleRule> {
        let tok = self
            .peek()
            .cloned()
            .ok_or_else(|| Error::Expression("unexpected end of expression".into()))?;
        self.pos += 1;
        match tok {
            Tok::Num(v) => Ok(ScaleRule::Const(v)),
            Tok::Op('(') => {
                let e = self.expr()?;
                if !self.eat_op(')') {
                    return Err(Error::Expression("missing `)`".into()));
                }
                Ok(e)
            }
            Tok::Ident(name) => match name.as_str() {
                "n" => Ok(ScaleRule::N),
                "sqrt" | "ln" | "log" | "exp" => {
                    let f = match name.as_str() {
                        "sqrt" => Func::Sqrt,
                        "exp" => Func::Exp,
                        _ => Func::Ln,
                    };
                    if !self.eat_op('(') {
                        return Err(Error::Expression(format!("`{name}` needs `(`")));
                    }
                    let arg = self.expr()?;
                    if !self.eat_op(')') {
                        return Err(Error::Expression("missing `)`".into()));
                    }
                    Ok(ScaleRule::Call(f, Box::new(arg)))
                }
                other => Err(Error::Expression(format!("unknown identifier `{other}`"))),
            },
            Tok::Op(c) => Err(Error::Expression(format!("unexpected `{c}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluates_published_scale_rules() {
        let r = ScaleRule::parse("n/2000").unwrap();
        assert_eq!(r.eval(2000.0), 1.0);
        let r = ScaleRule::parse("sqrt(n)/10").unwrap();
        assert_eq!(r.eval(400.0), 2.0);
        let r = ScaleRule::parse("2^3^2").unwrap();
        assert_eq!(r.eval(0.0), 512.0);
        let r = ScaleRule::parse("-(n - 4) * 1e-1").unwrap();
        assert!((r.eval(2.0) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn rejects_garbage() {
        assert!(ScaleRule::parse("n /").is_err());
        assert!(ScaleRule::parse("m + 1").is_err());
        assert!(ScaleRule::parse("(n").is_err());
        assert!(ScaleRule::parse("n)").is_err());
    }

    #[test]
    fn non_positive_scale_is_an_error() {
        let r = ScaleRule::parse("n - 10").unwrap();
        assert!(r.eval_scale(10).is_err());
        assert!(r.eval_scale(11).is_ok());
    }
}
