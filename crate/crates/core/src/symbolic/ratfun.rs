//! Sparse multivariate polynomials over kernels and the rational normal form built on them.

#![allow(clippy::mutable_key_type)]

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::expr::{rational_root, Expr, Func, Node};
use crate::Rational;

/// Kernel with exponent; kept sorted by kernel, exponents positive.
pub(crate) type Mono = Vec<(Expr, u32)>;

#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub(crate) struct Poly {
    pub(crate) terms: BTreeMap<Mono, Rational>,
}

fn mono_lcm(a: &Mono, b: &Mono) -> Mono {
    let mut out: BTreeMap<Expr, u32> = a.iter().cloned().collect();
    for (k, e) in b {
        let slot = out.entry(k.clone()).or_insert(0);
        *slot = (*slot).max(*e);
    }
    out.into_iter().collect()
}

fn mono_mul(a: &Mono, b: &Mono) -> Mono {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => {
                out.push(a[i].clone());
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j].clone());
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                out.push((a[i].0.clone(), a[i].1 + b[j].1));
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

impl Poly {
    pub(crate) fn zero() -> Poly {
        Poly::default()
    }

    pub(crate) fn constant(c: Rational) -> Poly {
        let mut p = Poly::zero();
        if !c.is_zero() {
            p.terms.insert(Vec::new(), c);
        }
        p
    }

    pub(crate) fn one() -> Poly {
        Poly::constant(Rational::one())
    }

    pub(crate) fn kernel(k: Expr) -> Poly {
        Poly::monomial(vec![(k, 1)], Rational::one())
    }

    pub(crate) fn monomial(m: Mono, c: Rational) -> Poly {
        let mut p = Poly::zero();
        if !c.is_zero() {
            p.terms.insert(m, c);
        }
        p
    }

    pub(crate) fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub(crate) fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_empty().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub(crate) fn is_constant(&self) -> bool {
        self.as_constant().is_some()
    }

    fn add_term(&mut self, m: Mono, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub(crate) fn add(&self, other: &Poly) -> Poly {
        let (mut big, small) =
            if self.terms.len() >= other.terms.len() { (self.clone(), other) } else { (other.clone(), self) };
        for (m, c) in &small.terms {
            big.add_term(m.clone(), c.clone());
        }
        big
    }

    pub(crate) fn neg(&self) -> Poly {
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect() }
    }

    pub(crate) fn sub(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c);
        }
        out
    }

    pub(crate) fn scale(&self, r: &Rational) -> Poly {
        if r.is_zero() {
            return Poly::zero();
        }
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), c * r)).collect() }
    }

    pub(crate) fn mul(&self, other: &Poly) -> Poly {
        if let Some(c) = other.as_constant() {
            return self.scale(&c);
        }
        if let Some(c) = self.as_constant() {
            return other.scale(&c);
        }
        let mut out = Poly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(mono_mul(ma, mb), ca * cb);
            }
        }
        out
    }

    pub(crate) fn mul_mono(&self, m: &Mono) -> Poly {
        Poly { terms: self.terms.iter().map(|(k, c)| (mono_mul(k, m), c.clone())).collect() }
    }

    pub(crate) fn powi(&self, n: u32) -> Poly {
        let mut result = Poly::one();
        let mut base = self.clone();
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                result = result.mul(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    pub(crate) fn kernels(&self) -> BTreeSet<Expr> {
        self.terms.keys().flat_map(|m| m.iter().map(|(k, _)| k.clone())).collect()
    }

    fn max_kernel(&self) -> Option<Expr> {
        self.terms.keys().flat_map(|m| m.iter().map(|(k, _)| k)).max().cloned()
    }

    pub(crate) fn leading_coeff(&self) -> Rational {
        self.terms.iter().next_back().map(|(_, c)| c.clone()).unwrap_or_else(Rational::zero)
    }

    pub(crate) fn make_monic(&self) -> Poly {
        let lc = self.leading_coeff();
        if lc.is_zero() || lc.is_one() {
            return self.clone();
        }
        self.scale(&lc.recip())
    }

    /// Coefficients with respect to the kernel `k`, indexed by exponent.
    fn coeffs_in(&self, k: &Expr) -> Vec<Poly> {
        let mut out: Vec<Poly> = vec![Poly::zero()];
        for (m, c) in &self.terms {
            let mut e = 0usize;
            let mut rest = Vec::with_capacity(m.len());
            for (kk, ee) in m {
                if kk == k {
                    e = *ee as usize;
                } else {
                    rest.push((kk.clone(), *ee));
                }
            }
            if out.len() <= e {
                out.resize(e + 1, Poly::zero());
            }
            out[e].add_term(rest, c.clone());
        }
        while out.len() > 1 && out.last().unwrap().is_zero() {
            out.pop();
        }
        out
    }

    fn from_coeffs(coeffs: &[Poly], k: &Expr) -> Poly {
        let mut out = Poly::zero();
        for (e, c) in coeffs.iter().enumerate() {
            if e == 0 {
                out = out.add(c);
            } else {
                out = out.add(&c.mul_mono(&vec![(k.clone(), e as u32)]));
            }
        }
        out
    }

    /// Exact quotient `self / b`, or `None` if `b` does not divide `self`.
    pub(crate) fn exact_div(&self, b: &Poly) -> Option<Poly> {
        if b.is_zero() {
            return None;
        }
        if let Some(c) = b.as_constant() {
            return Some(self.scale(&c.recip()));
        }
        if self.is_zero() {
            return Some(Poly::zero());
        }
        if self == b {
            return Some(Poly::one());
        }
        let k = b.max_kernel().expect("non-constant polynomial has a kernel");
        let mut r = self.coeffs_in(&k);
        let bc = b.coeffs_in(&k);
        if r.len() < bc.len() {
            return None;
        }
        let db = bc.len() - 1;
        let lb = &bc[db];
        let mut q = vec![Poly::zero(); r.len() - db];
        for i in (db..r.len()).rev() {
            if r[i].is_zero() {
                continue;
            }
            let qc = r[i].exact_div(lb)?;
            for (j, bj) in bc.iter().enumerate() {
                r[i - db + j] = r[i - db + j].sub(&qc.mul(bj));
            }
            q[i - db] = qc;
        }
        if r[..db].iter().any(|p| !p.is_zero()) {
            return None;
        }
        Some(Poly::from_coeffs(&q, &k))
    }

    /// Greatest common divisor, normalized to leading coefficient one. When the remainder
    /// sequence exceeds [`GCD_BUDGET`] term operations the result is `1`, which leaves the
    /// caller's fraction correct but possibly unreduced.
    pub(crate) fn gcd(&self, other: &Poly) -> Poly {
        let mut budget = GCD_BUDGET;
        self.gcd_inner(other, &mut budget).unwrap_or_else(Poly::one)
    }

    fn gcd_inner(&self, other: &Poly, budget: &mut usize) -> Option<Poly> {
        if self.is_zero() {
            return Some(other.make_monic());
        }
        if other.is_zero() {
            return Some(self.make_monic());
        }
        if self.is_constant() || other.is_constant() {
            return Some(Poly::one());
        }
        if self == other {
            return Some(self.make_monic());
        }
        let ks = self.kernels();
        let ko = other.kernels();
        let common: Vec<Expr> = ks.intersection(&ko).cloned().collect();
        if common.is_empty() {
            // A common factor must be free of every kernel: only constants qualify.
            return Some(Poly::one());
        }
        // Degree bounds of the gcd from univariate images; a bound of zero is exact.
        let mut best: Option<(usize, Expr)> = None;
        let mut candidate = false;
        for k in &common {
            let bound = image_gcd_degree(self, other, k);
            if bound == Some(0) {
                continue;
            }
            let da = self.degree_in(k);
            let db = other.degree_in(k);
            if bound == Some(da.min(db)) {
                candidate = true;
            }
            let cost = da.max(db);
            if best.as_ref().is_none_or(|(c, _)| cost < *c) {
                best = Some((cost, k.clone()));
            }
        }
        let Some((_, k)) = best else { return Some(Poly::one()) };
        if candidate {
            let (small, big) = if self.terms.len() <= other.terms.len() { (self, other) } else { (other, self) };
            if big.exact_div(small).is_some() {
                return Some(small.make_monic());
            }
            if small.exact_div(big).is_some() {
                return Some(big.make_monic());
            }
        }
        let ac = self.coeffs_in(&k);
        let bc = other.coeffs_in(&k);
        if ac.len() == 1 {
            return self.gcd_inner(&content(&bc, budget)?, budget);
        }
        if bc.len() == 1 {
            return content(&ac, budget)?.gcd_inner(other, budget);
        }
        let ca = content(&ac, budget)?;
        let cb = content(&bc, budget)?;
        let c = ca.gcd_inner(&cb, budget)?;
        let pa = primitive(&ac, &ca);
        let pb = primitive(&bc, &cb);
        let (mut r0, mut r1) = if pa.len() >= pb.len() { (pa, pb) } else { (pb, pa) };
        loop {
            let r = prem(&r0, &r1, budget)?;
            if r.iter().all(|p| p.is_zero()) {
                break;
            }
            if r.len() == 1 {
                r1 = vec![Poly::one()];
                break;
            }
            let cr = content(&r, budget)?;
            r0 = r1;
            r1 = monic_lead(primitive(&r, &cr));
        }
        Some(c.mul(&Poly::from_coeffs(&r1, &k)).make_monic())
    }

    pub(crate) fn degree_in(&self, k: &Expr) -> usize {
        self.terms.keys().filter_map(|m| m.iter().find(|(kk, _)| kk == k).map(|(_, e)| *e as usize)).max().unwrap_or(0)
    }

    /// Univariate image in `k` modulo [`IMAGE_PRIME`], every other kernel replaced by a
    /// pseudo-random integer. `None` if a coefficient denominator vanishes modulo the prime.
    fn image(&self, k: &Expr, round: u64) -> Option<Vec<u64>> {
        let mut out = vec![0u64; self.degree_in(k) + 1];
        let mut cache: BTreeMap<Expr, u64> = BTreeMap::new();
        for (m, c) in &self.terms {
            let mut v = rational_mod(c)?;
            let mut e = 0usize;
            for (kk, ee) in m {
                if kk == k {
                    e = *ee as usize;
                } else {
                    let val = *cache.entry(kk.clone()).or_insert_with(|| image_point(kk, round));
                    v = mul_mod(v, pow_mod(val, u64::from(*ee)));
                }
            }
            out[e] = add_mod(out[e], v);
        }
        Some(out)
    }

    /// Partial derivative with respect to a kernel treated as an indeterminate.
    pub(crate) fn partial_kernel(&self, k: &Expr) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            if let Some(pos) = m.iter().position(|(kk, _)| kk == k) {
                let e = m[pos].1;
                let mut nm = m.clone();
                if e == 1 {
                    nm.remove(pos);
                } else {
                    nm[pos].1 = e - 1;
                }
                out.add_term(nm, c * Rational::from_integer(BigInt::from(e)));
            }
        }
        out
    }

    /// Smallest monomial dividing every term.
    fn monomial_content(&self) -> Mono {
        let mut iter = self.terms.keys();
        let Some(first) = iter.next() else { return Vec::new() };
        let mut content: Mono = first.clone();
        for m in iter {
            content.retain_mut(|(k, e)| match m.iter().find(|(kk, _)| kk == k) {
                Some((_, ee)) => {
                    *e = (*e).min(*ee);
                    true
                }
                None => false,
            });
            if content.is_empty() {
                break;
            }
        }
        content
    }

    fn div_mono(&self, m: &Mono) -> Poly {
        let mut out = Poly::zero();
        for (mm, c) in &self.terms {
            let mut nm = mm.clone();
            for (k, e) in m {
                let pos = nm.iter().position(|(kk, _)| kk == k).expect("monomial divides");
                if nm[pos].1 == *e {
                    nm.remove(pos);
                } else {
                    nm[pos].1 -= e;
                }
            }
            out.add_term(nm, c.clone());
        }
        out
    }
}

fn image_point(k: &Expr, round: u64) -> u64 {
    let mut h = k.structural_hash() ^ round.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    h ^= h >> 33;
    h = h.wrapping_mul(0xff51_afd7_ed55_8ccd);
    h ^= h >> 33;
    h % IMAGE_PRIME
}

/// The Mersenne prime `2^61 - 1`.
const IMAGE_PRIME: u64 = (1 << 61) - 1;

fn add_mod(a: u64, b: u64) -> u64 {
    (a + b) % IMAGE_PRIME
}

fn sub_mod(a: u64, b: u64) -> u64 {
    (a + IMAGE_PRIME - b) % IMAGE_PRIME
}

fn mul_mod(a: u64, b: u64) -> u64 {
    ((u128::from(a) * u128::from(b)) % u128::from(IMAGE_PRIME)) as u64
}

fn pow_mod(mut a: u64, mut e: u64) -> u64 {
    let mut out = 1;
    while e > 0 {
        if e & 1 == 1 {
            out = mul_mod(out, a);
        }
        a = mul_mod(a, a);
        e >>= 1;
    }
    out
}

fn inv_mod(a: u64) -> u64 {
    pow_mod(a, IMAGE_PRIME - 2)
}

fn rational_mod(r: &Rational) -> Option<u64> {
    let p = BigInt::from(IMAGE_PRIME);
    let reduce = |n: &BigInt| -> u64 { u64::try_from(n.mod_floor(&p)).expect("residue below the prime") };
    let d = reduce(r.denom());
    if d == 0 {
        return None;
    }
    Some(mul_mod(reduce(r.numer()), inv_mod(d)))
}

/// Degree of `gcd(a(k), b(k))` over the rationals for univariate images in `k`; an upper bound
/// for the degree of the true gcd in `k`. `None` if no image kept both leading coefficients.
fn image_gcd_degree(a: &Poly, b: &Poly, k: &Expr) -> Option<usize> {
    let (da, db) = (a.degree_in(k), b.degree_in(k));
    let mut best: Option<usize> = None;
    for round in 0..3 {
        let (Some(ia), Some(ib)) = (a.image(k, round), b.image(k, round)) else { continue };
        if ia[da] == 0 || ib[db] == 0 {
            continue;
        }
        let d = univariate_gcd_degree(ia, ib);
        best = Some(best.map_or(d, |b: usize| b.min(d)));
        if d == 0 {
            break;
        }
    }
    best
}

fn univariate_gcd_degree(mut a: Vec<u64>, mut b: Vec<u64>) -> usize {
    let trim = |v: &mut Vec<u64>| {
        while v.len() > 1 && v.last() == Some(&0) {
            v.pop();
        }
    };
    trim(&mut a);
    trim(&mut b);
    if a.len() < b.len() {
        std::mem::swap(&mut a, &mut b);
    }
    loop {
        if b.len() == 1 {
            return if b[0] == 0 { a.len() - 1 } else { 0 };
        }
        while a.len() >= b.len() && !(a.len() == 1 && a[0] == 0) {
            let lead = mul_mod(*a.last().unwrap(), inv_mod(*b.last().unwrap()));
            let shift = a.len() - b.len();
            for (j, bj) in b.iter().enumerate() {
                a[shift + j] = sub_mod(a[shift + j], mul_mod(lead, *bj));
            }
            a.pop();
            trim(&mut a);
            if a.len() == 1 {
                break;
            }
        }
        std::mem::swap(&mut a, &mut b);
    }
}

/// Scales a coefficient list so the leading rational of its leading coefficient is one.
fn monic_lead(coeffs: Vec<Poly>) -> Vec<Poly> {
    let lc = coeffs.last().map(Poly::leading_coeff).unwrap_or_else(Rational::one);
    if lc.is_one() || lc.is_zero() {
        return coeffs;
    }
    let inv = lc.recip();
    coeffs.iter().map(|c| c.scale(&inv)).collect()
}

fn content(coeffs: &[Poly], budget: &mut usize) -> Option<Poly> {
    let mut g = Poly::zero();
    for c in coeffs {
        if c.is_zero() {
            continue;
        }
        g = g.gcd_inner(c, budget)?;
        if g.is_constant() {
            return Some(Poly::one());
        }
    }
    Some(g)
}

fn primitive(coeffs: &[Poly], cont: &Poly) -> Vec<Poly> {
    if cont.is_constant() {
        return coeffs.to_vec();
    }
    coeffs.iter().map(|c| c.exact_div(cont).expect("content divides")).collect()
}

/// Term operations allowed to one top-level [`Poly::gcd`].
const GCD_BUDGET: usize = 400_000;

/// Pseudo-remainder of coefficient lists, leading coefficient last.
fn prem(a: &[Poly], b: &[Poly], budget: &mut usize) -> Option<Vec<Poly>> {
    let db = b.len() - 1;
    let lb = &b[db];
    let mut r = a.to_vec();
    while r.len() > db && !(r.len() == 1 && r[0].is_zero()) {
        let work: usize = r.iter().chain(b).map(|p| p.terms.len()).sum();
        *budget = budget.checked_sub(work * lb.terms.len().max(1))?;
        let dr = r.len() - 1;
        let lr = r[dr].clone();
        for p in r.iter_mut() {
            *p = p.mul(lb);
        }
        for (j, bj) in b.iter().enumerate() {
            let idx = dr - db + j;
            r[idx] = r[idx].sub(&lr.mul(bj));
        }
        while r.len() > 1 && r.last().unwrap().is_zero() {
            r.pop();
        }
        if r.len() - 1 == dr {
            // Leading terms always cancel; guard against a non-reducing step anyway.
            r.pop();
        }
        if r.len() == 1 && r[0].is_zero() {
            break;
        }
    }
    Some(r)
}

/// What is known about `gcd(num, den)` before reduction.
enum GcdHint {
    Full,
    Coprime,
    Within(Poly),
}

// ----- kernels ------------------------------------------------------------------------------

pub(crate) enum KernelKind<'a> {
    Exp(&'a Expr),
    Root {
        base: &'a Expr,
        q: u32,
    },
    /// `abs(u)`, handled as the square root of `u^2`.
    Abs(&'a Expr),
    Plain,
}

pub(crate) fn kernel_kind(k: &Expr) -> KernelKind<'_> {
    match k.node() {
        Node::Apply(Func::Exp, u) => KernelKind::Exp(u),
        Node::Apply(Func::Abs, u) => KernelKind::Abs(u),
        Node::Pow(b, e) => match e.as_rational() {
            Some(r) if r.numer().is_one() && r.denom() > &BigInt::one() => {
                let q = u32::try_from(r.denom()).expect("radical index fits in u32");
                KernelKind::Root { base: b, q }
            }
            _ => KernelKind::Plain,
        },
        _ => KernelKind::Plain,
    }
}

// ----- rational functions -------------------------------------------------------------------

/// Reduced quotient of kernel polynomials. The denominator has leading coefficient one, carries
/// no exponential or radical monomial factor, and shares no polynomial factor with the numerator.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub(crate) struct RatFun {
    pub(crate) num: Poly,
    pub(crate) den: Poly,
}

impl RatFun {
    pub(crate) fn zero() -> RatFun {
        RatFun { num: Poly::zero(), den: Poly::one() }
    }

    pub(crate) fn constant(c: Rational) -> RatFun {
        RatFun { num: Poly::constant(c), den: Poly::one() }
    }

    pub(crate) fn from_poly(p: Poly) -> RatFun {
        RatFun::reduce(p, Poly::one())
    }

    pub(crate) fn kernel(k: Expr) -> RatFun {
        RatFun { num: Poly::kernel(k), den: Poly::one() }
    }

    pub(crate) fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub(crate) fn as_constant(&self) -> Option<Rational> {
        if self.den.is_constant() {
            self.num.as_constant()
        } else {
            None
        }
    }

    pub(crate) fn is_single_kernel(&self) -> bool {
        self.den.is_constant()
            && self.num.terms.len() == 1
            && self.num.terms.iter().next().is_some_and(|(m, c)| c.is_one() && m.len() == 1 && m[0].1 == 1)
    }

    /// Full normalization of `num / den`.
    pub(crate) fn reduce(num: Poly, den: Poly) -> RatFun {
        RatFun::reduce_with(num, den, GcdHint::Full)
    }

    /// Normalization where any common factor of `num` and `den` is known to divide `hint`,
    /// as long as canonicalization leaves both polynomials unchanged.
    fn reduce_with(num: Poly, den: Poly, hint: GcdHint) -> RatFun {
        assert!(!den.is_zero(), "division by zero in rational normal form");
        if num.is_zero() {
            return RatFun::zero();
        }
        let (mut num, mut den) = (num, den);
        let mut rewritten = false;
        for _ in 0..64 {
            let mut changed = false;
            if let Some((n1, d1)) = canon_poly(&num) {
                num = n1;
                den = den.mul(&d1);
                changed = true;
            }
            if let Some((n2, d2)) = canon_poly(&den) {
                den = n2;
                num = num.mul(&d2);
                changed = true;
            }
            if let Some((n3, d3)) = strip_den_content(&num, &den) {
                num = n3;
                den = d3;
                changed = true;
            }
            if !changed {
                break;
            }
            rewritten = true;
        }
        if num.is_zero() {
            return RatFun::zero();
        }
        if let Some(c) = den.as_constant() {
            return RatFun { num: num.scale(&c.recip()), den: Poly::one() };
        }
        let g = match hint {
            _ if rewritten => num.gcd(&den),
            GcdHint::Full => num.gcd(&den),
            GcdHint::Coprime => Poly::one(),
            GcdHint::Within(h) if h.is_constant() => Poly::one(),
            GcdHint::Within(h) => {
                // Peel common factors of `h` until none is left, so multiplicities above those in
                // `h` are removed too.
                let mut h = h;
                loop {
                    let g = num.gcd(&h).gcd(&den);
                    if g.is_constant() {
                        break;
                    }
                    num = num.exact_div(&g).expect("gcd divides numerator");
                    den = den.exact_div(&g).expect("gcd divides denominator");
                    h = g;
                }
                Poly::one()
            }
        };
        if !g.is_constant() {
            num = num.exact_div(&g).expect("gcd divides numerator");
            den = den.exact_div(&g).expect("gcd divides denominator");
        }
        let lc = den.leading_coeff();
        if !lc.is_one() {
            let inv = lc.recip();
            num = num.scale(&inv);
            den = den.scale(&inv);
        }
        if den.is_constant() {
            den = Poly::one();
        }
        RatFun { num, den }
    }

    pub(crate) fn add(&self, other: &RatFun) -> RatFun {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        if self.den == other.den {
            let n = self.num.add(&other.num);
            if self.den.is_constant() {
                return RatFun { num: n, den: Poly::one() };
            }
            return RatFun::reduce(n, self.den.clone());
        }
        let g = self.den.gcd(&other.den);
        let ad = self.den.exact_div(&g).expect("gcd divides");
        let bd = other.den.exact_div(&g).expect("gcd divides");
        let n = self.num.mul(&bd).add(&other.num.mul(&ad));
        let d = self.den.mul(&bd);
        RatFun::reduce_with(n, d, GcdHint::Within(g))
    }

    pub(crate) fn neg(&self) -> RatFun {
        RatFun { num: self.num.neg(), den: self.den.clone() }
    }

    pub(crate) fn sub(&self, other: &RatFun) -> RatFun {
        self.add(&other.neg())
    }

    pub(crate) fn scale(&self, r: &Rational) -> RatFun {
        if r.is_zero() {
            return RatFun::zero();
        }
        RatFun { num: self.num.scale(r), den: self.den.clone() }
    }

    pub(crate) fn mul(&self, other: &RatFun) -> RatFun {
        if self.is_zero() || other.is_zero() {
            return RatFun::zero();
        }
        if let Some(c) = self.as_constant() {
            return other.scale(&c);
        }
        if let Some(c) = other.as_constant() {
            return self.scale(&c);
        }
        let g1 = self.num.gcd(&other.den);
        let g2 = other.num.gcd(&self.den);
        let an = self.num.exact_div(&g1).expect("gcd divides");
        let bd = other.den.exact_div(&g1).expect("gcd divides");
        let bn = other.num.exact_div(&g2).expect("gcd divides");
        let ad = self.den.exact_div(&g2).expect("gcd divides");
        RatFun::reduce_with(an.mul(&bn), ad.mul(&bd), GcdHint::Coprime)
    }

    pub(crate) fn recip(&self) -> RatFun {
        RatFun::reduce_with(self.den.clone(), self.num.clone(), GcdHint::Coprime)
    }

    pub(crate) fn div(&self, other: &RatFun) -> RatFun {
        self.mul(&other.recip())
    }

    pub(crate) fn powi(&self, n: i64) -> RatFun {
        if n == 0 {
            return RatFun::constant(Rational::one());
        }
        let base = if n < 0 { self.recip() } else { self.clone() };
        let m = n.unsigned_abs() as u32;
        if m == 1 {
            return base;
        }
        RatFun::reduce_with(base.num.powi(m), base.den.powi(m), GcdHint::Coprime)
    }

    /// `self^r` for a rational exponent, introducing a radical kernel when needed.
    pub(crate) fn pow_rational(rf: &RatFun, r: &Rational) -> RatFun {
        let p = r.numer().clone();
        let q = r.denom().clone();
        if q.is_one() {
            let n = i64::try_from(&p).expect("integer exponent fits in i64");
            return rf.powi(n);
        }
        if rf.is_zero() {
            assert!(r.is_positive(), "zero raised to a negative power");
            return RatFun::zero();
        }
        let qi = u32::try_from(&q).expect("radical index fits in u32");
        let (m, s) = p.div_mod_floor(&q);
        let m = i64::try_from(&m).expect("exponent fits in i64");
        let s = u32::try_from(&s).expect("residue fits in u32");
        if let Some(c) = rf.as_constant() {
            if let Some(root) = rational_root(&c, qi) {
                return RatFun::constant(root).powi(i64::try_from(&p).expect("exponent fits"));
            }
        }
        let base = Expr::from_ratfun(rf.clone());
        let kernel = Expr::raw(Node::Pow(base, Expr::rational(Rational::new(BigInt::one(), q))));
        let kpow = RatFun { num: Poly::monomial(vec![(kernel, s)], Rational::one()), den: Poly::one() };
        let kpow = if s == 0 { RatFun::constant(Rational::one()) } else { kpow };
        rf.powi(m).mul(&kpow)
    }

    /// Function atom applied to a normalized argument, with elementary simplifications.
    pub(crate) fn apply(func: Func, arg: &Expr) -> RatFun {
        let c = arg.as_rational();
        let one = || RatFun::constant(Rational::one());
        match func {
            Func::Exp => {
                if c.is_some_and(|c| c.is_zero()) {
                    return one();
                }
                if let Node::Apply(Func::Ln, v) = arg.node() {
                    return (*v.ratfun()).clone();
                }
            }
            Func::Ln => {
                if c.is_some_and(|c| c.is_one()) {
                    return RatFun::zero();
                }
                if let Node::Apply(Func::Exp, v) = arg.node() {
                    return (*v.ratfun()).clone();
                }
            }
            Func::Atan | Func::Sin => {
                if c.is_some_and(|c| c.is_zero()) {
                    return RatFun::zero();
                }
            }
            Func::Cos => {
                if c.is_some_and(|c| c.is_zero()) {
                    return one();
                }
            }
            Func::Abs | Func::Sign => {
                if let Some(c) = c {
                    return if func == Func::Abs { RatFun::constant(c.abs()) } else { RatFun::constant(c.signum()) };
                }
                match arg.node() {
                    Node::Apply(Func::Exp, _) => {
                        return if func == Func::Abs { (*arg.ratfun()).clone() } else { one() };
                    }
                    Node::Apply(Func::Abs, _) if func == Func::Abs => return (*arg.ratfun()).clone(),
                    _ => {}
                }
                if func == Func::Sign {
                    return RatFun::apply(Func::Abs, arg).div(&arg.ratfun());
                }
                let rf = arg.ratfun();
                if rf.num.leading_coeff().is_negative() {
                    let flipped = Expr::from_ratfun(rf.neg());
                    let k = RatFun::kernel(Expr::raw(Node::Apply(func, flipped)));
                    return if func == Func::Abs { k } else { k.neg() };
                }
            }
        }
        RatFun::kernel(Expr::raw(Node::Apply(func, arg.clone())))
    }

    /// Rational function of an arbitrary node whose children are already normalized.
    pub(crate) fn of_node(e: &Expr) -> RatFun {
        match e.node() {
            Node::Num(r) => RatFun::constant(r.clone()),
            Node::Var(_) => RatFun::kernel(e.clone()),
            Node::Add(v) => v.iter().fold(RatFun::zero(), |acc, t| acc.add(&t.ratfun())),
            Node::Mul(v) => v.iter().fold(RatFun::constant(Rational::one()), |acc, t| acc.mul(&t.ratfun())),
            Node::Pow(b, x) => match x.as_rational() {
                Some(r) => {
                    if r.numer().is_one() && !r.denom().is_one() && !b.is_constant() {
                        RatFun::kernel(e.clone())
                    } else {
                        RatFun::pow_rational(&b.ratfun(), r)
                    }
                }
                None => RatFun::kernel(e.clone()),
            },
            Node::Apply(f, a) => RatFun::apply(*f, a),
        }
    }

    /// Partial derivative with respect to a variable.
    pub(crate) fn derivative(&self, v: &super::expr::Symbol) -> RatFun {
        let dn = poly_derivative(&self.num, v);
        if self.den.is_constant() {
            return dn;
        }
        let dd = poly_derivative(&self.den, v);
        if let Some(fast) = self.quotient_rule(&dn, &dd) {
            return fast;
        }
        let den = RatFun { num: self.den.clone(), den: Poly::one() };
        // (n/d)' = n'/d - n d'/d^2
        let t1 = dn.div(&den);
        if dd.is_zero() {
            return t1;
        }
        let t2 = RatFun { num: self.num.clone(), den: Poly::one() }.mul(&dd).div(&den.mul(&den));
        t1.sub(&t2)
    }

    /// `(n/d)' = (A (d/h) - n (B/h)) / (M d (d/h))` where `n' = A/M`, `d' = B/M` for a common
    /// multiple `M` of both denominators and `h = gcd(d, B)`. Any common factor left divides `h M`.
    fn quotient_rule(&self, dn: &RatFun, dd: &RatFun) -> Option<RatFun> {
        if dd.is_zero() {
            return None;
        }
        let m = if dn.den.terms.len() == 1 && dd.den.terms.len() == 1 {
            Poly::monomial(mono_lcm(dn.den.terms.keys().next()?, dd.den.terms.keys().next()?), Rational::one())
        } else {
            let g = dn.den.gcd(&dd.den);
            dn.den.mul(&dd.den.exact_div(&g)?).make_monic()
        };
        let a = dn.num.mul(&m.exact_div(&dn.den)?);
        let b = dd.num.mul(&m.exact_div(&dd.den)?);
        let h = self.den.gcd(&b);
        let dh = self.den.exact_div(&h)?;
        let bh = b.exact_div(&h)?;
        let num = a.mul(&dh).sub(&self.num.mul(&bh));
        let den = m.mul(&self.den).mul(&dh);
        Some(RatFun::reduce_with(num, den, GcdHint::Within(h.mul(&m))))
    }

    /// Display tree of this rational function.
    pub(crate) fn to_node(&self) -> Node {
        let num_node = poly_node(&self.num);
        if self.den.is_constant() {
            return num_node;
        }
        let mut factors: Vec<Expr> = match num_node {
            Node::Mul(v) => v,
            Node::Num(ref r) if r.is_one() => Vec::new(),
            other => vec![Expr::raw(other)],
        };
        let neg_one = Expr::int(-1);
        if self.den.terms.len() == 1 {
            let (m, _) = self.den.terms.iter().next().unwrap();
            for (k, e) in m {
                factors.push(Expr::raw(Node::Pow(k.clone(), Expr::int(-(*e as i64)))));
            }
        } else {
            factors.push(Expr::raw(Node::Pow(Expr::raw(poly_node(&self.den)), neg_one)));
        }
        if factors.len() == 1 {
            return factors.pop().unwrap().node().clone();
        }
        Node::Mul(factors)
    }
}

fn kernel_power_expr(k: &Expr, e: u32) -> Expr {
    if e == 1 {
        return k.clone();
    }
    if let KernelKind::Root { base, q } = kernel_kind(k) {
        let r = Rational::new(BigInt::from(e), BigInt::from(q));
        return Expr::raw(Node::Pow(base.clone(), Expr::rational(r)));
    }
    Expr::raw(Node::Pow(k.clone(), Expr::int(e as i64)))
}

fn term_node(m: &Mono, c: &Rational) -> Node {
    let mut factors = Vec::with_capacity(m.len() + 1);
    if !c.is_one() {
        factors.push(Expr::rational(c.clone()));
    }
    for (k, e) in m {
        factors.push(kernel_power_expr(k, *e));
    }
    match factors.len() {
        0 => Node::Num(Rational::one()),
        1 => factors.pop().unwrap().node().clone(),
        _ => Node::Mul(factors),
    }
}

fn poly_node(p: &Poly) -> Node {
    match p.terms.len() {
        0 => Node::Num(Rational::zero()),
        1 => {
            let (m, c) = p.terms.iter().next().unwrap();
            term_node(m, c)
        }
        _ => Node::Add(p.terms.iter().map(|(m, c)| Expr::raw(term_node(m, c))).collect()),
    }
}

/// Reduces radical powers at or above the index and merges exponential factors.
/// Returns `None` when the polynomial is already canonical.
fn canon_poly(p: &Poly) -> Option<(Poly, Poly)> {
    let needs = |m: &Mono| {
        let mut exps = 0;
        for (k, e) in m {
            match kernel_kind(k) {
                KernelKind::Exp(_) => {
                    exps += *e;
                }
                KernelKind::Root { q, .. } => {
                    if *e >= q {
                        return true;
                    }
                }
                KernelKind::Abs(_) => {
                    if *e >= 2 {
                        return true;
                    }
                }
                KernelKind::Plain => {}
            }
        }
        exps > 1
    };
    if !p.terms.keys().any(needs) {
        return None;
    }
    let mut plain = Poly::zero();
    let mut num = Poly::zero();
    let mut den = Poly::one();
    for (m, c) in &p.terms {
        if !needs(m) {
            plain.add_term(m.clone(), c.clone());
            continue;
        }
        let mut rest: Mono = Vec::new();
        let mut exp_arg = Expr::zero();
        let mut factor = RatFun::constant(c.clone());
        for (k, e) in m {
            match kernel_kind(k) {
                KernelKind::Exp(u) => {
                    exp_arg = &exp_arg + &u.scale(&Rational::from_integer(BigInt::from(*e)));
                }
                KernelKind::Root { base, q } if *e >= q => {
                    let whole = (*e / q) as i64;
                    let s = *e % q;
                    factor = factor.mul(&base.ratfun().powi(whole));
                    if s > 0 {
                        rest.push((k.clone(), s));
                    }
                }
                KernelKind::Abs(u) if *e >= 2 => {
                    factor = factor.mul(&u.ratfun().powi(2 * (*e / 2) as i64));
                    if *e % 2 == 1 {
                        rest.push((k.clone(), 1));
                    }
                }
                _ => rest.push((k.clone(), *e)),
            }
        }
        let rest_sorted = {
            let mut r = rest;
            r.sort_by(|a, b| a.0.cmp(&b.0));
            r
        };
        let mut term = factor.num.mul_mono(&rest_sorted);
        let mut tden = factor.den.clone();
        if !exp_arg.is_zero_const() {
            let ex = RatFun::apply(Func::Exp, &exp_arg);
            term = term.mul(&ex.num);
            tden = tden.mul(&ex.den);
        }
        // num/den + term/tden
        if tden == den {
            num = num.add(&term);
        } else if tden.is_constant() {
            num = num.add(&term.mul(&den).scale(&tden.as_constant().unwrap().recip()));
        } else {
            num = num.mul(&tden).add(&term.mul(&den));
            den = den.mul(&tden);
        }
    }
    let num = num.add(&plain.mul(&den));
    Some((num, den))
}

/// Moves exponential and radical monomial factors out of the denominator.
fn strip_den_content(num: &Poly, den: &Poly) -> Option<(Poly, Poly)> {
    let content = den.monomial_content();
    let special: Mono = content.into_iter().filter(|(k, _)| !matches!(kernel_kind(k), KernelKind::Plain)).collect();
    if special.is_empty() {
        return None;
    }
    let mut n = num.clone();
    let mut d = den.div_mono(&special);
    for (k, e) in &special {
        match kernel_kind(k) {
            KernelKind::Exp(u) => {
                let inv = RatFun::apply(Func::Exp, &(-u.scale(&Rational::from_integer(BigInt::from(*e)))));
                n = n.mul(&inv.num);
                d = d.mul(&inv.den);
            }
            KernelKind::Root { q, .. } => {
                // num / (K^e R) = num K^(q-e) / (K^q R)
                let comp = q - (*e % q);
                let comp = if comp == q { 0 } else { comp };
                let whole = *e / q + u32::from(comp > 0);
                let base = match kernel_kind(k) {
                    KernelKind::Root { base, .. } => base.ratfun(),
                    _ => unreachable!(),
                };
                if comp > 0 {
                    n = n.mul_mono(&vec![(k.clone(), comp)]);
                }
                let bp = base.powi(whole as i64);
                n = n.mul(&bp.den);
                d = d.mul(&bp.num);
            }
            KernelKind::Abs(u) => {
                // num / (A^e R) = num A^(e mod 2) / (u^(e + e mod 2) R)
                let odd = *e % 2;
                if odd == 1 {
                    n = n.mul_mono(&vec![(k.clone(), 1)]);
                }
                let up = u.ratfun().powi(i64::from(*e + odd));
                n = n.mul(&up.den);
                d = d.mul(&up.num);
            }
            KernelKind::Plain => unreachable!(),
        }
    }
    Some((n, d))
}

/// Derivative of a kernel polynomial: sum over kernels of (dP/dK) * dK/dv.
fn poly_derivative(p: &Poly, v: &super::expr::Symbol) -> RatFun {
    let mut out = RatFun::zero();
    for k in p.kernels() {
        if !k.depends_on(v) {
            continue;
        }
        let dk = super::diff::kernel_derivative(&k, v);
        if dk.is_zero() {
            continue;
        }
        let pk = p.partial_kernel(&k);
        out = out.add(&RatFun::from_poly(pk).mul(&dk));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Poly {
        Poly::kernel(Expr::x())
    }

    fn y() -> Poly {
        Poly::kernel(Expr::y())
    }

    fn c(n: i64) -> Poly {
        Poly::constant(Rational::from_integer(BigInt::from(n)))
    }

    #[test]
    fn gcd_of_products() {
        let a = x().add(&y()); // x + y
        let b = x().sub(&c(1)); // x - 1
        let d = x().mul(&y()).add(&c(2));
        let p = a.mul(&b).mul(&d);
        let q = a.mul(&d).mul(&x().add(&c(3)));
        let g = p.gcd(&q);
        assert_eq!(g, a.mul(&d).make_monic());
    }

    #[test]
    fn exact_division() {
        let a = x().add(&y());
        let b = x().sub(&y());
        let p = a.mul(&b);
        assert_eq!(p.exact_div(&a), Some(b.clone()));
        assert_eq!(p.exact_div(&x()), None);
    }

    #[test]
    fn gcd_coprime_is_one() {
        let a = x().mul(&x()).add(&c(1));
        let b = x().add(&y());
        assert!(a.gcd(&b).is_constant());
    }
}
