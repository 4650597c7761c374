use std::collections::{BTreeMap, HashMap};

use num_integer::Integer;
use num_traits::{Float, One, Signed};

use super::expr::{Expr, Func, Node, Symbol};
use crate::{Rational, Scalar};

/// Why a numeric evaluation failed.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("logarithm of a non-positive value in `{0}`")]
    LogNonPositive(String),
    #[error("division by zero in `{0}`")]
    DivisionByZero(String),
    #[error("even root of a negative value in `{0}`")]
    NegativeRoot(String),
    #[error("non-finite value in `{0}`")]
    NonFinite(String),
    #[error("variable `{0}` has no value")]
    Unbound(String),
}

/// Value of an expression together with the largest magnitude met while computing it.
#[derive(Clone, Copy, Debug)]
pub struct Evaluation<T> {
    pub value: T,
    pub max_magnitude: T,
}

/// Variable assignment for numeric evaluation.
#[derive(Clone, Debug, Default)]
pub struct Point<T> {
    values: BTreeMap<Symbol, T>,
}

impl<T: Scalar> Point<T> {
    pub fn new() -> Self {
        Point { values: BTreeMap::new() }
    }

    pub fn with(mut self, name: &str, v: T) -> Self {
        self.values.insert(Symbol::new(name), v);
        self
    }

    pub fn set(&mut self, s: &Symbol, v: T) {
        self.values.insert(s.clone(), v);
    }

    pub fn get(&self, s: &Symbol) -> Option<T> {
        self.values.get(s).copied()
    }

    pub fn from_pairs(pairs: &[(&str, T)]) -> Self {
        let mut p = Point::new();
        for (n, v) in pairs {
            p.values.insert(Symbol::new(n), *v);
        }
        p
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Symbol, &T)> {
        self.values.iter()
    }
}

impl Expr {
    /// Evaluates at a point, reporting the offending subexpression on domain errors.
    pub fn eval<T: Scalar>(&self, point: &Point<T>) -> Result<Evaluation<T>, EvalError> {
        let mut ev = Evaluator { point, memo: HashMap::new(), max: T::zero() };
        let value = ev.eval(self)?;
        Ok(Evaluation { value, max_magnitude: ev.max })
    }

    /// Evaluates at an exact rational point in the given float width.
    pub fn evaluate<T: Scalar>(&self, point: &BTreeMap<Symbol, Rational>) -> Result<T, EvalError> {
        let mut p = Point::new();
        for (s, r) in point {
            p.set(s, T::from_rational(r));
        }
        self.eval(&p).map(|e| e.value)
    }

    /// Shorthand for `f64` evaluation from name/value pairs.
    pub fn eval_f64(&self, pairs: &[(&str, f64)]) -> Result<f64, EvalError> {
        self.eval(&Point::from_pairs(pairs)).map(|e| e.value)
    }
}

struct Evaluator<'a, T> {
    point: &'a Point<T>,
    memo: HashMap<usize, T>,
    max: T,
}

impl<T: Scalar> Evaluator<'_, T> {
    fn eval(&mut self, e: &Expr) -> Result<T, EvalError> {
        if let Some(v) = self.memo.get(&e.address()) {
            return Ok(*v);
        }
        let v = self.compute(e)?;
        if !Float::is_finite(v) {
            return Err(EvalError::NonFinite(e.to_string()));
        }
        let m = Float::abs(v);
        if m > self.max {
            self.max = m;
        }
        self.memo.insert(e.address(), v);
        Ok(v)
    }

    fn compute(&mut self, e: &Expr) -> Result<T, EvalError> {
        Ok(match e.node() {
            Node::Num(r) => T::from_rational(r),
            Node::Var(s) => self.point.get(s).ok_or_else(|| EvalError::Unbound(s.to_string()))?,
            Node::Add(v) => {
                let mut acc = T::zero();
                for t in v {
                    acc += self.eval(t)?;
                }
                acc
            }
            Node::Mul(v) => {
                let mut acc = T::one();
                for t in v {
                    acc *= self.eval(t)?;
                }
                acc
            }
            Node::Pow(b, x) => {
                let bv = self.eval(b)?;
                match x.as_rational() {
                    Some(r) => rational_power(bv, r).ok_or_else(|| {
                        if bv.is_zero() {
                            EvalError::DivisionByZero(e.to_string())
                        } else {
                            EvalError::NegativeRoot(e.to_string())
                        }
                    })?,
                    None => {
                        let xv = self.eval(x)?;
                        if bv > T::zero() {
                            Float::powf(bv, xv)
                        } else if bv.is_zero() && xv > T::zero() {
                            T::zero()
                        } else {
                            return Err(EvalError::NegativeRoot(e.to_string()));
                        }
                    }
                }
            }
            Node::Apply(f, a) => {
                let av = self.eval(a)?;
                match f {
                    Func::Exp => Float::exp(av),
                    Func::Ln => {
                        if av <= T::zero() {
                            return Err(EvalError::LogNonPositive(e.to_string()));
                        }
                        Float::ln(av)
                    }
                    Func::Atan => Float::atan(av),
                    Func::Sin => Float::sin(av),
                    Func::Cos => Float::cos(av),
                    Func::Abs => Float::abs(av),
                    Func::Sign => {
                        if av > T::zero() {
                            T::one()
                        } else if av < T::zero() {
                            -T::one()
                        } else {
                            T::zero()
                        }
                    }
                }
            }
        })
    }
}

/// Real value of `b^r` for rational `r`; odd roots of negatives are taken on the real branch.
pub(crate) fn rational_power<T: Scalar>(b: T, r: &Rational) -> Option<T> {
    if r.denom().is_one() {
        if b.is_zero() && r.is_negative() {
            return None;
        }
        let n = i32::try_from(r.numer()).ok()?;
        return Some(Float::powi(b, n));
    }
    if b.is_zero() {
        return if r.is_positive() { Some(T::zero()) } else { None };
    }
    let rv = T::from_rational(r);
    if b > T::zero() {
        return Some(Float::powf(b, rv));
    }
    if r.denom().is_odd() {
        let mag = Float::powf(-b, rv);
        let odd_num = r.numer().is_odd();
        return Some(if odd_num { -mag } else { mag });
    }
    None
}
