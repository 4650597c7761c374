use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use super::expr::{rational_to_f64, Expr, Func, Node, Symbol};
use super::interval::{prove_sign, Interval};
use super::parse::{parse, Chart, ParseError};
use crate::Rational;

/// Strict sign of a quantity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn of_f64(v: f64) -> Option<Sign> {
        if v > 0.0 {
            Some(Sign::Positive)
        } else if v < 0.0 {
            Some(Sign::Negative)
        } else {
            None
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Positive => Sign::Negative,
            Sign::Negative => Sign::Positive,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Sign::Positive => "+",
            Sign::Negative => "-",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum AssumptionError {
    #[error("cannot read relation `{0}`: expected `lhs > rhs`, `lhs < rhs` or `sign(u) = +1|-1`")]
    Malformed(String),
    #[error("in relation `{relation}`: {source}")]
    Parse { relation: String, source: ParseError },
    #[error("empty interval for `{0}`")]
    EmptyInterval(String),
}

/// Sign declarations and the sampling box used by zero tests.
#[derive(Clone, Debug)]
pub struct Assumptions {
    positive: Vec<Expr>,
    bounds: BTreeMap<Symbol, (Rational, Rational)>,
    default_bounds: (Rational, Rational),
    seed: u64,
    samples: usize,
}

impl Default for Assumptions {
    fn default() -> Self {
        Assumptions {
            positive: Vec::new(),
            bounds: BTreeMap::new(),
            default_bounds: (Rational::new(BigInt::from(1), BigInt::from(2)), Rational::from_integer(BigInt::from(2))),
            seed: 0,
            samples: 12,
        }
    }
}

/// Interval budget for sign proofs by bisection.
const SIGN_BUDGET: usize = 256;

impl Assumptions {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of sample points per zero test.
    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn with_samples(mut self, k: usize) -> Self {
        self.samples = k.max(1);
        self
    }

    pub fn with_interval(mut self, var: &str, lo: Rational, hi: Rational) -> Result<Self, AssumptionError> {
        if lo >= hi {
            return Err(AssumptionError::EmptyInterval(var.to_string()));
        }
        self.bounds.insert(Symbol::new(var), (lo, hi));
        Ok(self)
    }

    pub fn set_interval(&mut self, var: &str, lo: Rational, hi: Rational) -> Result<(), AssumptionError> {
        if lo >= hi {
            return Err(AssumptionError::EmptyInterval(var.to_string()));
        }
        self.bounds.insert(Symbol::new(var), (lo, hi));
        Ok(())
    }

    pub fn with_default_interval(mut self, lo: Rational, hi: Rational) -> Self {
        self.default_bounds = (lo, hi);
        self
    }

    pub fn interval(&self, var: &Symbol) -> (Rational, Rational) {
        self.bounds.get(var).cloned().unwrap_or_else(|| self.default_bounds.clone())
    }

    pub fn explicit_intervals(&self) -> &BTreeMap<Symbol, (Rational, Rational)> {
        &self.bounds
    }

    pub fn declared_positive(&self) -> &[Expr] {
        &self.positive
    }

    pub fn assume_positive(mut self, e: Expr) -> Self {
        self.positive.push(e);
        self
    }

    pub fn assume_negative(mut self, e: Expr) -> Self {
        self.positive.push(-e);
        self
    }

    pub fn push_positive(&mut self, e: Expr) {
        self.positive.push(e);
    }

    /// Adds a textual relation such as `1 + z^2 > 0`, `x < 3` or `sign(z - 1) = -1`.
    pub fn assume(&mut self, relation: &str, chart: &Chart) -> Result<(), AssumptionError> {
        let parse_side = |s: &str| {
            parse(s.trim(), chart).map_err(|source| AssumptionError::Parse { relation: relation.to_string(), source })
        };
        if let Some(eq) = relation.find('=').filter(|_| !relation.contains(">=") && !relation.contains("<=")) {
            let lhs = relation[..eq].trim();
            let rhs = relation[eq + 1..].trim();
            let inner = lhs
                .strip_prefix("sign(")
                .and_then(|s| s.strip_suffix(')'))
                .ok_or_else(|| AssumptionError::Malformed(relation.to_string()))?;
            let u = parse_side(inner)?;
            let v = parse_side(rhs)?;
            match v.as_rational().map(|r| r.signum()) {
                Some(s) if s == Rational::from_integer(1.into()) => self.positive.push(u),
                Some(s) if s == Rational::from_integer((-1).into()) => self.positive.push(-u),
                _ => return Err(AssumptionError::Malformed(relation.to_string())),
            }
            return Ok(());
        }
        let (pos, op_len, greater) = if let Some(p) = relation.find(">=") {
            (p, 2, true)
        } else if let Some(p) = relation.find("<=") {
            (p, 2, false)
        } else if let Some(p) = relation.find('>') {
            (p, 1, true)
        } else if let Some(p) = relation.find('<') {
            (p, 1, false)
        } else {
            return Err(AssumptionError::Malformed(relation.to_string()));
        };
        let lhs = parse_side(&relation[..pos])?;
        let rhs = parse_side(&relation[pos + op_len..])?;
        let diff = if greater { lhs - rhs } else { rhs - lhs };
        self.positive.push(diff);
        Ok(())
    }

    fn interval_box(&self, vars: &[Symbol]) -> BTreeMap<Symbol, Interval> {
        vars.iter()
            .map(|v| {
                let (lo, hi) = self.interval(v);
                (v.clone(), Interval::new(rational_to_f64(&lo), rational_to_f64(&hi)))
            })
            .collect()
    }

    /// Sign of `e` from declarations, or proved by interval arithmetic over the box.
    pub fn sign_of(&self, e: &Expr) -> Option<Sign> {
        if let Some(r) = e.as_rational() {
            return if r.is_zero() {
                None
            } else if r.is_positive() {
                Some(Sign::Positive)
            } else {
                Some(Sign::Negative)
            };
        }
        for d in &self.positive {
            let ratio = e / d;
            if let Some(r) = ratio.as_rational() {
                if r.is_positive() {
                    return Some(Sign::Positive);
                }
                if r.is_negative() {
                    return Some(Sign::Negative);
                }
            }
        }
        let vars = e.free_symbols();
        let bx = self.interval_box(&vars);
        prove_sign(e, &bx, SIGN_BUDGET).map(|p| if p { Sign::Positive } else { Sign::Negative })
    }

    /// Rewrites `abs`/`sign` atoms whose argument sign is known and collects the arguments
    /// (and even-root bases) whose sign could not be established.
    pub fn resolve_branches(&self, e: &Expr) -> (Expr, Vec<Expr>) {
        let mut undetermined = Vec::new();
        let resolved = e.map_atoms(&mut |f, a| match f {
            Func::Abs => match self.sign_of(a) {
                Some(Sign::Positive) => Some(a.clone()),
                Some(Sign::Negative) => Some(-a),
                None => {
                    undetermined.push(a.clone());
                    None
                }
            },
            Func::Sign => match self.sign_of(a) {
                Some(Sign::Positive) => Some(Expr::one()),
                Some(Sign::Negative) => Some(Expr::int(-1)),
                None => {
                    undetermined.push(a.clone());
                    None
                }
            },
            _ => None,
        });
        resolved.walk(&mut |n| {
            if let Node::Pow(b, x) = n.node() {
                let even_root = x.as_rational().map(|r| r.denom() % 2u32 == BigInt::zero()).unwrap_or(true);
                if even_root && self.sign_of(b) != Some(Sign::Positive) && !undetermined.contains(b) {
                    undetermined.push(b.clone());
                }
            }
        });
        (resolved, undetermined)
    }

    /// Whether every declared positive quantity is positive at the point.
    pub fn holds_at(&self, point: &super::eval::Point<f64>) -> bool {
        self.positive.iter().all(|d| d.eval(point).map(|v| v.value > 0.0).unwrap_or(false))
    }

    /// Applies a change of coordinates to the declarations and box.
    pub fn transformed(
        &self,
        subs: &[(Symbol, Expr)],
        new_bounds: BTreeMap<Symbol, (Rational, Rational)>,
    ) -> Assumptions {
        Assumptions {
            positive: self.positive.iter().map(|d| d.substitute_all(subs)).collect(),
            bounds: new_bounds,
            default_bounds: self.default_bounds.clone(),
            seed: self.seed,
            samples: self.samples,
        }
    }
}
