use std::fmt;

use num_traits::{One, Signed};

use super::expr::{Expr, Node};
use crate::Rational;

fn prec(e: &Expr) -> u8 {
    match e.node() {
        Node::Add(_) => 1,
        Node::Mul(_) => 2,
        Node::Num(r) if r.is_negative() || !r.denom().is_one() => 2,
        Node::Pow(..) => 3,
        _ => 4,
    }
}

fn write_rational(f: &mut fmt::Formatter<'_>, r: &Rational) -> fmt::Result {
    if r.denom().is_one() {
        write!(f, "{}", r.numer())
    } else {
        write!(f, "{}/{}", r.numer(), r.denom())
    }
}

fn write_wrapped(f: &mut fmt::Formatter<'_>, e: &Expr, min_prec: u8) -> fmt::Result {
    if prec(e) < min_prec {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

/// Splits a product into (negated?, coefficient magnitude, numerator factors, denominator factors).
fn split_product(e: &Expr) -> (bool, Rational, Vec<Expr>, Vec<Expr>) {
    let factors: Vec<Expr> = match e.node() {
        Node::Mul(v) => v.clone(),
        _ => vec![e.clone()],
    };
    let mut coeff = Rational::one();
    let mut num = Vec::new();
    let mut den = Vec::new();
    for fct in factors {
        match fct.node() {
            Node::Num(r) => coeff *= r,
            Node::Pow(b, x) if x.as_rational().is_some_and(|r| r.is_negative()) => {
                let r = x.as_rational().unwrap();
                if r == &-Rational::one() {
                    den.push(b.clone());
                } else {
                    den.push(Expr::raw(Node::Pow(b.clone(), Expr::rational(-r))));
                }
            }
            _ => num.push(fct),
        }
    }
    (coeff.is_negative(), coeff.abs(), num, den)
}

fn write_product(f: &mut fmt::Formatter<'_>, e: &Expr, skip_sign: bool) -> fmt::Result {
    let (neg, coeff, num, den) = split_product(e);
    if neg && !skip_sign {
        f.write_str("-")?;
    }
    let mut first = true;
    let den_takes_denom = !den.is_empty() || num.is_empty();
    if den_takes_denom {
        if !coeff.numer().is_one() || num.is_empty() {
            write!(f, "{}", coeff.numer())?;
            first = false;
        }
    } else if !coeff.is_one() {
        write_rational(f, &coeff)?;
        first = false;
    }
    for n in &num {
        if !first {
            f.write_str("*")?;
        }
        write_wrapped(f, n, 3)?;
        first = false;
    }
    let mut den_items: Vec<String> =
        den.iter().map(|d| if prec(d) < 3 { format!("({d})") } else { format!("{d}") }).collect();
    if !coeff.denom().is_one() && den_takes_denom {
        den_items.insert(0, coeff.denom().to_string());
    }
    match den_items.len() {
        0 => Ok(()),
        1 => write!(f, "/{}", den_items[0]),
        _ => write!(f, "/({})", den_items.join("*")),
    }
}

fn term_is_negative(e: &Expr) -> bool {
    match e.node() {
        Node::Num(r) => r.is_negative(),
        Node::Mul(v) => v.iter().any(|t| t.as_rational().is_some_and(|r| r.is_negative())),
        _ => false,
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Num(r) => write_rational(f, r),
            Node::Var(s) => write!(f, "{s}"),
            Node::Add(terms) => {
                for (i, t) in terms.iter().enumerate() {
                    let neg = term_is_negative(t);
                    if i == 0 {
                        if neg {
                            f.write_str("-")?;
                        }
                    } else {
                        f.write_str(if neg { " - " } else { " + " })?;
                    }
                    match t.node() {
                        Node::Num(r) => write_rational(f, &r.abs())?,
                        Node::Mul(_) => write_product(f, t, true)?,
                        _ => write_wrapped(f, t, 2)?,
                    }
                }
                Ok(())
            }
            Node::Mul(_) => write_product(f, self, false),
            Node::Pow(b, x) => {
                if let Some(r) = x.as_rational() {
                    if r.is_negative() {
                        return write_product(f, &Expr::raw(Node::Mul(vec![self.clone()])), false);
                    }
                }
                write_wrapped(f, b, 4)?;
                f.write_str("^")?;
                match x.node() {
                    Node::Num(r) if r.denom().is_one() && !r.is_negative() => write!(f, "{}", r.numer()),
                    _ => write!(f, "({x})"),
                }
            }
            Node::Apply(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}
