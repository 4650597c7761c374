//! Outward-rounded interval evaluation, used to prove signs of subexpressions over a box.

use std::collections::BTreeMap;

use num_integer::Integer;
use num_traits::Signed;

use super::expr::{rational_to_f64, Expr, Func, Node, Symbol};
use crate::Rational;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn point(v: f64) -> Self {
        Interval { lo: v, hi: v }
    }

    fn widen(lo: f64, hi: f64) -> Option<Self> {
        if lo.is_nan() || hi.is_nan() || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
            return None;
        }
        Some(Interval { lo: lo.next_down(), hi: hi.next_up() })
    }

    pub fn contains_zero(&self) -> bool {
        self.lo <= 0.0 && self.hi >= 0.0
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    fn add(self, o: Self) -> Option<Self> {
        Self::widen(self.lo + o.lo, self.hi + o.hi)
    }

    fn mul(self, o: Self) -> Option<Self> {
        let p = [self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi];
        if p.iter().any(|v| v.is_nan()) {
            return None;
        }
        let lo = p.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Self::widen(lo, hi)
    }

    fn recip(self) -> Option<Self> {
        if self.contains_zero() {
            return None;
        }
        Self::widen(1.0 / self.hi, 1.0 / self.lo)
    }

    fn powi(self, n: i64) -> Option<Self> {
        if n < 0 {
            return self.powi(-n)?.recip();
        }
        if n == 0 {
            return Some(Interval::point(1.0));
        }
        let e = n as i32;
        if n % 2 == 1 {
            return Self::widen(self.lo.powi(e), self.hi.powi(e));
        }
        let (a, b) = (self.lo.abs(), self.hi.abs());
        if self.contains_zero() {
            Self::widen(0.0, a.max(b).powi(e))
        } else {
            Self::widen(a.min(b).powi(e), a.max(b).powi(e))
        }
    }

    /// Real `q`-th root; monotone on its domain.
    fn root(self, q: u64) -> Option<Self> {
        let r = |v: f64| {
            if v >= 0.0 {
                v.powf(1.0 / q as f64)
            } else {
                -(-v).powf(1.0 / q as f64)
            }
        };
        if q.is_multiple_of(2) && self.lo < 0.0 {
            return None;
        }
        Self::widen(r(self.lo), r(self.hi))
    }

    fn monotone(self, f: fn(f64) -> f64) -> Option<Self> {
        Self::widen(f(self.lo), f(self.hi))
    }
}

/// Evaluates `e` over the box; `None` when a subexpression may leave its domain.
pub fn eval_interval(e: &Expr, bounds: &BTreeMap<Symbol, Interval>) -> Option<Interval> {
    match e.node() {
        Node::Num(r) => {
            let v = rational_to_f64(r);
            Interval::widen(v, v)
        }
        Node::Var(s) => bounds.get(s).copied(),
        Node::Add(v) => {
            let mut acc = Interval::point(0.0);
            for t in v {
                acc = acc.add(eval_interval(t, bounds)?)?;
            }
            Some(acc)
        }
        Node::Mul(v) => {
            let mut acc = Interval::point(1.0);
            for t in v {
                acc = acc.mul(eval_interval(t, bounds)?)?;
            }
            Some(acc)
        }
        Node::Pow(b, x) => {
            let bi = eval_interval(b, bounds)?;
            match x.as_rational() {
                Some(r) => rational_pow(bi, r),
                None => {
                    if bi.lo <= 0.0 {
                        return None;
                    }
                    let l = bi.monotone(f64::ln)?;
                    eval_interval(x, bounds)?.mul(l)?.monotone(f64::exp)
                }
            }
        }
        Node::Apply(f, a) => {
            let ai = eval_interval(a, bounds)?;
            match f {
                Func::Exp => ai.monotone(f64::exp),
                Func::Ln => {
                    if ai.lo <= 0.0 {
                        None
                    } else {
                        ai.monotone(f64::ln)
                    }
                }
                Func::Atan => ai.monotone(f64::atan),
                Func::Sin | Func::Cos => Some(Interval::new(-1.0, 1.0)),
                Func::Abs => {
                    if ai.lo >= 0.0 {
                        Some(ai)
                    } else if ai.hi <= 0.0 {
                        Some(Interval::new(-ai.hi, -ai.lo))
                    } else {
                        Some(Interval::new(0.0, ai.hi.max(-ai.lo)))
                    }
                }
                Func::Sign => Some(if ai.lo > 0.0 {
                    Interval::point(1.0)
                } else if ai.hi < 0.0 {
                    Interval::point(-1.0)
                } else {
                    Interval::new(-1.0, 1.0)
                }),
            }
        }
    }
}

fn rational_pow(b: Interval, r: &Rational) -> Option<Interval> {
    let p = i64::try_from(r.numer()).ok()?;
    let q = u64::try_from(r.denom()).ok()?;
    if q == 1 {
        return b.powi(p);
    }
    if q.is_even() && b.lo < 0.0 {
        return None;
    }
    let rooted = b.root(q)?;
    if r.is_negative() && rooted.contains_zero() {
        return None;
    }
    rooted.powi(p)
}

/// Proves the sign of `e` on the box by bisection. Returns `Some(true)` for positive,
/// `Some(false)` for negative, `None` if neither could be shown.
pub fn prove_sign(e: &Expr, bounds: &BTreeMap<Symbol, Interval>, budget: usize) -> Option<bool> {
    let vars: Vec<Symbol> = e.free_symbols();
    let mut stack = vec![bounds.clone()];
    let mut sign: Option<bool> = None;
    let mut evaluations = 0;
    while let Some(b) = stack.pop() {
        evaluations += 1;
        if evaluations > budget {
            return None;
        }
        let verdict = eval_interval(e, &b).and_then(|iv| {
            if iv.lo > 0.0 {
                Some(true)
            } else if iv.hi < 0.0 {
                Some(false)
            } else {
                None
            }
        });
        match (verdict, sign) {
            (Some(v), None) => sign = Some(v),
            (Some(v), Some(s)) if v != s => return None,
            (Some(_), Some(_)) => {}
            (None, _) => {
                let widest =
                    vars.iter().filter_map(|v| b.get(v).map(|iv| (v, iv.width()))).max_by(|a, c| a.1.total_cmp(&c.1));
                let (v, w) = widest?;
                if w <= 1e-9 {
                    return None;
                }
                let iv = b[v];
                let mid = 0.5 * (iv.lo + iv.hi);
                let mut left = b.clone();
                left.insert(v.clone(), Interval::new(iv.lo, mid));
                let mut right = b;
                right.insert(v.clone(), Interval::new(mid, iv.hi));
                stack.push(right);
                stack.push(left);
            }
        }
    }
    sign
}
