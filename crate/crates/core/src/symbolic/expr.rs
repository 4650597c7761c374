use std::cmp::Ordering;
use std::fmt;
use std::hash::{DefaultHasher, Hash, Hasher};
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::{Arc, OnceLock};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::ratfun::RatFun;
use crate::Rational;

/// Variable name. Ordered by its text so that printed sums list variables alphabetically.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(Arc<str>);

impl Symbol {
    pub fn new(name: &str) -> Self {
        Symbol(Arc::from(name))
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Symbol {
    fn from(s: &str) -> Self {
        Symbol::new(s)
    }
}

/// Transcendental atoms supported by the kernel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Func {
    Exp,
    Ln,
    Atan,
    Sin,
    Cos,
    Abs,
    Sign,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Atan => "atan",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Abs => "abs",
            Func::Sign => "sign",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "atan" => Func::Atan,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "abs" => Func::Abs,
            "sign" => Func::Sign,
            _ => return None,
        })
    }
}

/// One node of an expression tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Node {
    Num(Rational),
    Var(Symbol),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Pow(Expr, Expr),
    Apply(Func, Expr),
}

impl Node {
    fn rank(&self) -> u8 {
        match self {
            Node::Num(_) => 0,
            Node::Var(_) => 1,
            Node::Apply(..) => 2,
            Node::Pow(..) => 3,
            Node::Mul(_) => 4,
            Node::Add(_) => 5,
        }
    }
}

struct Inner {
    node: Node,
    hash: u64,
    rf: OnceLock<Arc<RatFun>>,
}

/// Immutable, normalized symbolic expression.
///
/// Every public constructor returns the rational normal form: the expression is viewed as a
/// quotient of polynomials in *kernels* (variables, function atoms, radicals) with no common
/// polynomial factor, integer powers of radicals reduced below their index, and all exponential
/// factors of a monomial merged into one.
#[derive(Clone)]
pub struct Expr(Arc<Inner>);

impl Expr {
    pub(crate) fn raw(node: Node) -> Expr {
        let mut h = DefaultHasher::new();
        node.rank().hash(&mut h);
        match &node {
            Node::Num(r) => r.hash(&mut h),
            Node::Var(s) => s.hash(&mut h),
            Node::Add(v) | Node::Mul(v) => {
                for e in v {
                    e.0.hash.hash(&mut h);
                }
            }
            Node::Pow(b, e) => {
                b.0.hash.hash(&mut h);
                e.0.hash.hash(&mut h);
            }
            Node::Apply(f, a) => {
                f.hash(&mut h);
                a.0.hash.hash(&mut h);
            }
        }
        Expr(Arc::new(Inner { node, hash: h.finish(), rf: OnceLock::new() }))
    }

    fn raw_with(node: Node, rf: Arc<RatFun>) -> Expr {
        let e = Expr::raw(node);
        let _ = e.0.rf.set(rf);
        e
    }

    pub fn node(&self) -> &Node {
        &self.0.node
    }

    pub(crate) fn structural_hash(&self) -> u64 {
        self.0.hash
    }

    pub fn ptr_eq(&self, other: &Expr) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    pub(crate) fn address(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    // ----- constructors -------------------------------------------------------------------

    pub fn rational(r: Rational) -> Expr {
        Expr::raw(Node::Num(r))
    }

    pub fn int(n: i64) -> Expr {
        Expr::rational(Rational::from_integer(BigInt::from(n)))
    }

    pub fn frac(n: i64, d: i64) -> Expr {
        Expr::rational(Rational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn var(name: &str) -> Expr {
        Expr::raw(Node::Var(Symbol::new(name)))
    }

    pub fn symbol(s: &Symbol) -> Expr {
        Expr::raw(Node::Var(s.clone()))
    }

    pub fn x() -> Expr {
        Expr::var("x")
    }

    pub fn y() -> Expr {
        Expr::var("y")
    }

    pub fn z() -> Expr {
        Expr::var("z")
    }

    /// Builds the normalized expression of a rational function.
    pub(crate) fn from_ratfun(rf: RatFun) -> Expr {
        let rf = Arc::new(rf);
        let node = rf.to_node();
        match node {
            // Kernels and constants are rebuilt on demand; caching would make a kernel's
            // rational function point back at itself.
            Node::Num(_) | Node::Var(_) | Node::Apply(..) => Expr::raw(node),
            Node::Pow(_, ref e) if matches!(e.node(), Node::Num(_)) && rf.is_single_kernel() => Expr::raw(node),
            _ => Expr::raw_with(node, rf),
        }
    }

    /// Rational-function view of this expression.
    pub(crate) fn ratfun(&self) -> Arc<RatFun> {
        if let Some(rf) = self.0.rf.get() {
            return rf.clone();
        }
        let rf = Arc::new(RatFun::of_node(self));
        match self.node() {
            Node::Num(_) | Node::Var(_) | Node::Apply(..) => rf,
            Node::Pow(..) if rf.is_single_kernel() => rf,
            _ => {
                let _ = self.0.rf.set(rf.clone());
                rf
            }
        }
    }

    /// Normal form of an arbitrary (possibly hand-built) tree.
    pub fn normalize(&self) -> Expr {
        Expr::from_ratfun(RatFun::of_node(self))
    }

    pub fn pow(&self, exponent: &Expr) -> Expr {
        if let Node::Num(r) = exponent.node() {
            return self.pow_rational(r);
        }
        if self.is_zero_const() || self.is_one_const() {
            return self.clone();
        }
        Expr::from_ratfun(RatFun::kernel(Expr::raw(Node::Pow(self.clone(), exponent.clone()))))
    }

    pub fn powi(&self, n: i64) -> Expr {
        self.pow_rational(&Rational::from_integer(BigInt::from(n)))
    }

    pub fn pow_rational(&self, r: &Rational) -> Expr {
        Expr::from_ratfun(RatFun::pow_rational(&self.ratfun(), r))
    }

    pub fn sqrt(&self) -> Expr {
        self.pow_rational(&Rational::new(BigInt::from(1), BigInt::from(2)))
    }

    pub fn apply(func: Func, arg: &Expr) -> Expr {
        Expr::from_ratfun(RatFun::apply(func, arg))
    }

    pub fn exp(&self) -> Expr {
        Expr::apply(Func::Exp, self)
    }

    pub fn ln(&self) -> Expr {
        Expr::apply(Func::Ln, self)
    }

    pub fn atan(&self) -> Expr {
        Expr::apply(Func::Atan, self)
    }

    pub fn sin(&self) -> Expr {
        Expr::apply(Func::Sin, self)
    }

    pub fn cos(&self) -> Expr {
        Expr::apply(Func::Cos, self)
    }

    pub fn abs(&self) -> Expr {
        Expr::apply(Func::Abs, self)
    }

    pub fn sign(&self) -> Expr {
        Expr::apply(Func::Sign, self)
    }

    pub fn scale(&self, r: &Rational) -> Expr {
        Expr::from_ratfun(self.ratfun().scale(r))
    }

    // ----- queries ------------------------------------------------------------------------

    pub fn as_rational(&self) -> Option<&Rational> {
        match self.node() {
            Node::Num(r) => Some(r),
            _ => None,
        }
    }

    pub fn is_zero_const(&self) -> bool {
        matches!(self.node(), Node::Num(r) if r.is_zero())
    }

    pub fn is_one_const(&self) -> bool {
        matches!(self.node(), Node::Num(r) if r.is_one())
    }

    pub fn is_constant(&self) -> bool {
        self.free_symbols().is_empty()
    }

    pub fn children(&self) -> Vec<&Expr> {
        match self.node() {
            Node::Num(_) | Node::Var(_) => vec![],
            Node::Add(v) | Node::Mul(v) => v.iter().collect(),
            Node::Pow(b, e) => vec![b, e],
            Node::Apply(_, a) => vec![a],
        }
    }

    /// Variables occurring anywhere in the tree, sorted.
    pub fn free_symbols(&self) -> Vec<Symbol> {
        let mut out = std::collections::BTreeSet::new();
        self.collect_symbols(&mut out);
        out.into_iter().collect()
    }

    fn collect_symbols(&self, out: &mut std::collections::BTreeSet<Symbol>) {
        if let Node::Var(s) = self.node() {
            out.insert(s.clone());
        }
        for c in self.children() {
            c.collect_symbols(out);
        }
    }

    pub fn depends_on(&self, v: &Symbol) -> bool {
        match self.node() {
            Node::Var(s) => s == v,
            _ => self.children().iter().any(|c| c.depends_on(v)),
        }
    }

    /// Visits every node once per occurrence, parents before children.
    pub fn walk(&self, visit: &mut dyn FnMut(&Expr)) {
        visit(self);
        for c in self.children() {
            c.walk(visit);
        }
    }

    /// Number of nodes in the tree (shared subtrees counted per occurrence).
    pub fn size(&self) -> usize {
        let mut n = 0;
        self.walk(&mut |_| n += 1);
        n
    }

    /// Replaces every occurrence of `v` by `value` and renormalizes.
    pub fn substitute(&self, v: &Symbol, value: &Expr) -> Expr {
        self.substitute_all(&[(v.clone(), value.clone())])
    }

    pub fn substitute_all(&self, subs: &[(Symbol, Expr)]) -> Expr {
        let mut memo = std::collections::HashMap::new();
        self.subst_rec(subs, &mut memo)
    }

    fn subst_rec(&self, subs: &[(Symbol, Expr)], memo: &mut std::collections::HashMap<usize, Expr>) -> Expr {
        if let Some(e) = memo.get(&self.address()) {
            return e.clone();
        }
        let out = match self.node() {
            Node::Num(_) => self.clone(),
            Node::Var(s) => match subs.iter().find(|(v, _)| v == s) {
                Some((_, e)) => e.clone(),
                None => self.clone(),
            },
            Node::Add(v) => v.iter().fold(Expr::zero(), |acc, t| acc + t.subst_rec(subs, memo)),
            Node::Mul(v) => v.iter().fold(Expr::one(), |acc, t| acc * t.subst_rec(subs, memo)),
            Node::Pow(b, e) => b.subst_rec(subs, memo).pow(&e.subst_rec(subs, memo)),
            Node::Apply(f, a) => Expr::apply(*f, &a.subst_rec(subs, memo)),
        };
        memo.insert(self.address(), out.clone());
        out
    }

    /// Rebuilds the tree bottom-up, letting `rewrite` replace function atoms.
    pub(crate) fn map_atoms(&self, rewrite: &mut dyn FnMut(Func, &Expr) -> Option<Expr>) -> Expr {
        match self.node() {
            Node::Num(_) | Node::Var(_) => self.clone(),
            Node::Add(v) => v.iter().fold(Expr::zero(), |acc, t| acc + t.map_atoms(rewrite)),
            Node::Mul(v) => v.iter().fold(Expr::one(), |acc, t| acc * t.map_atoms(rewrite)),
            Node::Pow(b, e) => b.map_atoms(rewrite).pow(&e.map_atoms(rewrite)),
            Node::Apply(f, a) => {
                let a2 = a.map_atoms(rewrite);
                match rewrite(*f, &a2) {
                    Some(e) => e,
                    None => Expr::apply(*f, &a2),
                }
            }
        }
    }
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.ptr_eq(other) || (self.0.hash == other.0.hash && self.0.node == other.0.node)
    }
}

impl Eq for Expr {}

impl Hash for Expr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.hash.hash(state)
    }
}

impl PartialOrd for Expr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Expr {
    fn cmp(&self, other: &Self) -> Ordering {
        if self.ptr_eq(other) {
            return Ordering::Equal;
        }
        let (a, b) = (self.node(), other.node());
        a.rank().cmp(&b.rank()).then_with(|| match (a, b) {
            (Node::Num(p), Node::Num(q)) => p.cmp(q),
            (Node::Var(p), Node::Var(q)) => p.cmp(q),
            _ => self.0.hash.cmp(&other.0.hash).then_with(|| cmp_structural(a, b)),
        })
    }
}

fn cmp_structural(a: &Node, b: &Node) -> Ordering {
    match (a, b) {
        (Node::Add(p), Node::Add(q)) | (Node::Mul(p), Node::Mul(q)) => p.cmp(q),
        (Node::Pow(b1, e1), Node::Pow(b2, e2)) => b1.cmp(b2).then_with(|| e1.cmp(e2)),
        (Node::Apply(f1, a1), Node::Apply(f2, a2)) => f1.cmp(f2).then_with(|| a1.cmp(a2)),
        _ => a.rank().cmp(&b.rank()),
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

// ----- operators ----------------------------------------------------------------------------

fn add(a: &Expr, b: &Expr) -> Expr {
    if a.is_zero_const() {
        return b.clone();
    }
    if b.is_zero_const() {
        return a.clone();
    }
    Expr::from_ratfun(a.ratfun().add(&b.ratfun()))
}

fn sub(a: &Expr, b: &Expr) -> Expr {
    if b.is_zero_const() {
        return a.clone();
    }
    Expr::from_ratfun(a.ratfun().sub(&b.ratfun()))
}

fn mul(a: &Expr, b: &Expr) -> Expr {
    if a.is_one_const() {
        return b.clone();
    }
    if b.is_one_const() {
        return a.clone();
    }
    if a.is_zero_const() || b.is_zero_const() {
        return Expr::zero();
    }
    Expr::from_ratfun(a.ratfun().mul(&b.ratfun()))
}

fn div(a: &Expr, b: &Expr) -> Expr {
    if b.is_one_const() {
        return a.clone();
    }
    Expr::from_ratfun(a.ratfun().div(&b.ratfun()))
}

macro_rules! binop {
    ($tr:ident, $m:ident, $f:ident) => {
        impl $tr<Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                $f(&self, &rhs)
            }
        }
        impl $tr<&Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                $f(&self, rhs)
            }
        }
        impl $tr<Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                $f(self, &rhs)
            }
        }
        impl $tr<&Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                $f(self, rhs)
            }
        }
        impl $tr<i64> for Expr {
            type Output = Expr;
            fn $m(self, rhs: i64) -> Expr {
                $f(&self, &Expr::int(rhs))
            }
        }
        impl $tr<i64> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: i64) -> Expr {
                $f(self, &Expr::int(rhs))
            }
        }
        impl $tr<Expr> for i64 {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                $f(&Expr::int(self), &rhs)
            }
        }
        impl $tr<&Expr> for i64 {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                $f(&Expr::int(self), rhs)
            }
        }
    };
}

binop!(Add, add, add);
binop!(Sub, sub, sub);
binop!(Mul, mul, mul);
binop!(Div, div, div);

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::from_ratfun(self.ratfun().neg())
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::from_ratfun(self.ratfun().neg())
    }
}

impl std::iter::Sum for Expr {
    fn sum<I: Iterator<Item = Expr>>(iter: I) -> Expr {
        iter.fold(Expr::zero(), |a, b| a + b)
    }
}

impl std::iter::Product for Expr {
    fn product<I: Iterator<Item = Expr>>(iter: I) -> Expr {
        iter.fold(Expr::one(), |a, b| a * b)
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Self {
        Expr::int(n)
    }
}

impl From<Rational> for Expr {
    fn from(r: Rational) -> Self {
        Expr::rational(r)
    }
}

// ----- helpers shared with the rational-function layer -------------------------------------

/// Exact `q`-th root of a rational, if it exists in the rationals.
pub(crate) fn rational_root(r: &Rational, q: u32) -> Option<Rational> {
    if r.is_negative() {
        if q.is_multiple_of(2) {
            return None;
        }
        return rational_root(&-r, q).map(|s| -s);
    }
    let n = integer_root(r.numer(), q)?;
    let d = integer_root(r.denom(), q)?;
    Some(Rational::new(n, d))
}

fn integer_root(n: &BigInt, q: u32) -> Option<BigInt> {
    let root = n.nth_root(q);
    if num_traits::pow(root.clone(), q as usize) == *n {
        Some(root)
    } else {
        None
    }
}

pub(crate) fn rational_to_f64(r: &Rational) -> f64 {
    match (r.numer().to_f64(), r.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => {
            // Scale both down so the quotient survives conversion.
            let shift = r.numer().bits().max(r.denom().bits()).saturating_sub(1000);
            let n = (r.numer() >> shift).to_f64().unwrap_or(f64::NAN);
            let d = (r.denom() >> shift).to_f64().unwrap_or(f64::NAN);
            n / d
        }
    }
}

/// Converts a finite `f64` to the exact rational it represents.
pub fn rational_from_f64(v: f64) -> Option<Rational> {
    Rational::from_float(v)
}
