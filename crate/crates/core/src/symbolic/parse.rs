use super::expr::{Expr, Func, Symbol};
use crate::Rational;

/// Ordered list of coordinate names an expression may use.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chart {
    vars: Vec<Symbol>,
}

impl Default for Chart {
    /// The jet chart `(x, y, z)` with `z = y'`.
    fn default() -> Self {
        Chart::new(&["x", "y", "z"])
    }
}

impl Chart {
    pub fn new(names: &[&str]) -> Self {
        Chart { vars: names.iter().map(|n| Symbol::new(n)).collect() }
    }

    pub fn from_symbols(vars: Vec<Symbol>) -> Self {
        Chart { vars }
    }

    pub fn vars(&self) -> &[Symbol] {
        &self.vars
    }

    pub fn dim(&self) -> usize {
        self.vars.len()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.vars.iter().any(|v| v.name() == name)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name() == name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { offset: usize, name: String },
    #[error("division by zero at offset {offset}")]
    DivisionByZero { offset: usize },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownIdentifier { offset, .. }
            | ParseError::DivisionByZero { offset } => *offset,
        }
    }
}

/// Parses an infix expression over `chart`. The identifier `p` stands for `z` when the chart
/// has a `z` and no `p` of its own.
pub fn parse(text: &str, chart: &Chart) -> Result<Expr, ParseError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0, chart };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.error(format!("unexpected `{}`", p.src[p.pos] as char)));
    }
    Ok(e)
}

/// Parses over the default chart `(x, y, z)`.
pub fn parse_default(text: &str) -> Result<Expr, ParseError> {
    parse(text, &Chart::default())
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    chart: &'a Chart,
}

impl Parser<'_> {
    fn error(&self, message: String) -> ParseError {
        ParseError::Syntax { offset: self.pos, message }
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

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.term()?;
        loop {
            if self.eat(b'+') {
                acc = acc + self.term()?;
            } else if self.eat(b'-') {
                acc = acc - self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.factor()?;
        loop {
            if self.eat(b'*') {
                acc = acc * self.factor()?;
            } else if self.peek() == Some(b'/') {
                self.pos += 1;
                let at = self.pos;
                let d = self.factor()?;
                if d.is_zero_const() {
                    return Err(ParseError::DivisionByZero { offset: at });
                }
                acc = acc / d;
            } else {
                return Ok(acc);
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.eat(b'-') {
            return Ok(-self.factor()?);
        }
        if self.eat(b'+') {
            return self.factor();
        }
        let base = self.base()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let at = self.pos;
            let exponent = self.factor()?;
            if base.is_zero_const() && exponent.as_rational().is_some_and(|r| r < &Rational::from_integer(0.into())) {
                return Err(ParseError::DivisionByZero { offset: at });
            }
            return Ok(base.pow(&exponent));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            None => Err(self.error("unexpected end of input".into())),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected `)`".into()));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.identifier(),
            Some(c) => Err(self.error(format!("unexpected `{}`", c as char))),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos - s
        };
        let int_len = digits(self);
        let mut frac = String::new();
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            let s = self.pos;
            let n = digits(self);
            frac = String::from_utf8_lossy(&self.src[s..s + n]).into_owned();
        }
        if int_len == 0 && frac.is_empty() {
            self.pos = start;
            return Err(self.error("malformed number".into()));
        }
        let int_part = String::from_utf8_lossy(&self.src[start..start + int_len]).into_owned();
        let mut exp10: i64 = -(frac.len() as i64);
        if self.pos < self.src.len() && (self.src[self.pos] == b'e' || self.src[self.pos] == b'E') {
            let save = self.pos;
            self.pos += 1;
            let mut sign = 1;
            if self.pos < self.src.len() && (self.src[self.pos] == b'+' || self.src[self.pos] == b'-') {
                if self.src[self.pos] == b'-' {
                    sign = -1;
                }
                self.pos += 1;
            }
            let s = self.pos;
            let n = digits(self);
            if n == 0 {
                self.pos = save;
            } else {
                let v: i64 = std::str::from_utf8(&self.src[s..s + n])
                    .ok()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| self.error("exponent out of range".into()))?;
                exp10 += sign * v;
            }
        }
        let mantissa: num_bigint::BigInt =
            format!("{int_part}{frac}").trim_start_matches('0').parse().unwrap_or_default();
        let ten = num_bigint::BigInt::from(10);
        let r = if exp10 >= 0 {
            Rational::from_integer(mantissa * num_traits::pow(ten, exp10 as usize))
        } else {
            Rational::new(mantissa, num_traits::pow(ten, (-exp10) as usize))
        };
        Ok(Expr::rational(r))
    }

    fn identifier(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii identifier");
        if self.peek() == Some(b'(') && (name == "sqrt" || Func::from_name(name).is_some()) {
            self.pos += 1;
            let arg = self.expr()?;
            if !self.eat(b')') {
                return Err(self.error("expected `)`".into()));
            }
            return Ok(match name {
                "sqrt" => arg.sqrt(),
                _ => Expr::apply(Func::from_name(name).unwrap(), &arg),
            });
        }
        if self.chart.contains(name) {
            return Ok(Expr::var(name));
        }
        if name == "p" && self.chart.contains("z") {
            return Ok(Expr::z());
        }
        Err(ParseError::UnknownIdentifier { offset: start, name: name.to_string() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unbalanced_paren_offset() {
        let err = parse_default("x*(").unwrap_err();
        assert_eq!(err.offset(), 3);
        assert!(matches!(err, ParseError::Syntax { .. }));
    }

    #[test]
    fn p_aliases_z() {
        assert_eq!(parse_default("p^3").unwrap(), Expr::z().powi(3));
    }

    #[test]
    fn unknown_identifier() {
        let err = parse_default("x + w").unwrap_err();
        assert_eq!(err, ParseError::UnknownIdentifier { offset: 4, name: "w".into() });
    }

    #[test]
    fn decimals_and_rationals() {
        assert_eq!(parse_default("0.25").unwrap(), Expr::frac(1, 4));
        assert_eq!(parse_default("3/4").unwrap(), Expr::frac(3, 4));
        assert_eq!(parse_default("1.5e-1").unwrap(), Expr::frac(3, 20));
    }

    #[test]
    fn precedence() {
        let e = parse_default("-z^2").unwrap();
        assert_eq!(e, -(Expr::z().powi(2)));
        let e = parse_default("2^3^2").unwrap();
        assert_eq!(e, Expr::int(512));
    }
}
