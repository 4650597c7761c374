//! Dimension of the symmetry algebra from the rank of the structure function and its derivatives.
//!
//! Functions on the bundle are tracked through their values along the section `s` used by the
//! connection formulas. For a word `w = k1 k2 …` in the horizontal fields, `T_w` is the iterated
//! derivative of the curvature values `(a, b, c, d)`. Vertical derivatives are linear in the `T`s
//! with constant matrix coefficients, obtained from the action on `(a, b, c, d)` and the brackets
//! `[e_i, u_k]`.

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::cartan::{connection_values, frame_derivative, scalars_in, Derivatives};
use crate::jet::{expand, Jet};
use crate::lie::{d_rho_curvature, structure_constants};
use crate::symbolic::{EvalError, Expr};
use crate::Scalar;

type Word = Vec<u8>;
type M4<T> = [[T; 4]; 4];

/// Largest word length tried before giving up on stabilization.
pub const MAX_ORDER: usize = 5;
/// Default word length.
pub const DEFAULT_ORDER: usize = 3;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymmetryEstimate {
    pub dimension: usize,
    /// `false` when the rank kept growing up to [`MAX_ORDER`]; `dimension` is then an upper bound.
    pub stabilized: bool,
    /// Rank of the Jacobian using words of length `0, 1, …`.
    pub ranks: Vec<usize>,
}

/// Vertical derivative `E(i, w) = Σ M_v T_v`.
type LinComb<T> = Vec<(Word, M4<T>)>;

struct Tower<T: Scalar> {
    dv: Derivatives<Jet<T>>,
    conn: [[Jet<T>; 3]; 5],
    t: HashMap<Word, Vec<Jet<T>>>,
    e: HashMap<(u8, Word), LinComb<T>>,
    e_val: HashMap<(u8, Word), Vec<Jet<T>>>,
    brackets: [[[T; 8]; 3]; 5],
    action: [M4<T>; 5],
}

fn prepend(k: u8, w: &[u8]) -> Word {
    let mut out = Vec::with_capacity(w.len() + 1);
    out.push(k);
    out.extend_from_slice(w);
    out
}

fn push_term<T: Scalar>(lc: &mut LinComb<T>, v: Word, m: M4<T>) {
    if let Some((_, acc)) = lc.iter_mut().find(|(w, _)| *w == v) {
        for i in 0..4 {
            for j in 0..4 {
                acc[i][j] += m[i][j];
            }
        }
    } else {
        lc.push((v, m));
    }
}

impl<T: Scalar> Tower<T> {
    fn new(f: &Expr, point: [T; 3], order: usize) -> Result<Self, EvalError> {
        let fj = expand(f, point, order)?;
        let mut dv = Derivatives::new(fj);
        let s = scalars_in(&mut dv);
        let conn = connection_values(&mut dv);
        let cst = structure_constants::<T>();
        let brackets = std::array::from_fn(|i| std::array::from_fn(|k| cst[3 + i][k]));
        let action = d_rho_curvature::<T>().map(|m| std::array::from_fn(|i| std::array::from_fn(|j| m[i][j])));
        let mut t = HashMap::new();
        t.insert(Vec::new(), vec![s.a, s.b, s.c, s.d]);
        Ok(Tower { dv, conn, t, e: HashMap::new(), e_val: HashMap::new(), brackets, action })
    }

    fn lincomb(&mut self, i: u8, w: &[u8]) -> LinComb<T> {
        if let Some(lc) = self.e.get(&(i, w.to_vec())) {
            return lc.clone();
        }
        let mut lc: LinComb<T> = Vec::new();
        if w.is_empty() {
            let m = self.action[i as usize].map(|row| row.map(|v| -v));
            lc.push((Vec::new(), m));
        } else {
            let k = w[0];
            let rest = &w[1..];
            for (v, m) in self.lincomb(i, rest) {
                push_term(&mut lc, prepend(k, &v), m);
            }
            let br = self.brackets[i as usize][k as usize];
            let id = |s: T| std::array::from_fn(|r| std::array::from_fn(|c| if r == c { s } else { T::zero() }));
            for j in 0..3u8 {
                let c = br[j as usize];
                if !c.is_zero() {
                    push_term(&mut lc, prepend(j, rest), id(c));
                }
            }
            for j in 0..5u8 {
                let c = br[3 + j as usize];
                if c.is_zero() {
                    continue;
                }
                for (v, m) in self.lincomb(j, rest) {
                    push_term(&mut lc, v, m.map(|row| row.map(|x| x * c)));
                }
            }
        }
        self.e.insert((i, w.to_vec()), lc.clone());
        lc
    }

    fn t_of(&mut self, w: &[u8]) -> Vec<Jet<T>> {
        if let Some(v) = self.t.get(w) {
            return v.clone();
        }
        let k = w[0] as usize;
        let rest = &w[1..];
        let base = self.t_of(rest);
        let mut out: Vec<Jet<T>> = base.iter().map(|g| frame_derivative(&self.dv, k, g)).collect();
        for i in 0..5u8 {
            let w_i = self.conn[i as usize][k].clone();
            if w_i.is_zero() {
                continue;
            }
            let ev = self.e_value(i, rest);
            for (o, e) in out.iter_mut().zip(ev.iter()) {
                *o = o.sub(&w_i.mul(e));
            }
        }
        self.t.insert(w.to_vec(), out.clone());
        out
    }

    fn e_value(&mut self, i: u8, w: &[u8]) -> Vec<Jet<T>> {
        if let Some(v) = self.e_val.get(&(i, w.to_vec())) {
            return v.clone();
        }
        let lc = self.lincomb(i, w);
        let mut acc: Option<Vec<Jet<T>>> = None;
        for (v, m) in lc {
            let tv = self.t_of(&v);
            let terms: Vec<Jet<T>> = (0..4)
                .map(|r| {
                    let mut s = tv[0].scale(m[r][0]);
                    for c in 1..4 {
                        if !m[r][c].is_zero() {
                            s = s.add(&tv[c].scale(m[r][c]));
                        }
                    }
                    s
                })
                .collect();
            acc = Some(match acc {
                None => terms,
                Some(a) => a.iter().zip(terms.iter()).map(|(x, y)| x.add(y)).collect(),
            });
        }
        let out = acc.unwrap_or_else(|| {
            let z = self.t_of(&[])[0].scale(T::zero());
            vec![z.clone(), z.clone(), z.clone(), z]
        });
        self.e_val.insert((i, w.to_vec()), out.clone());
        out
    }

    /// Jacobian rows (one per component of every `T_w` with `|w| = len`).
    fn rows(&mut self, len: usize) -> Vec<[T; 8]> {
        let mut out = Vec::new();
        for w in words(len) {
            let d: Vec<Vec<Jet<T>>> = (0..3u8).map(|k| self.t_of(&prepend(k, &w))).collect();
            let e: Vec<Vec<Jet<T>>> = (0..5u8).map(|i| self.e_value(i, &w)).collect();
            for c in 0..4 {
                let mut row = [T::zero(); 8];
                for k in 0..3 {
                    row[k] = d[k][c].value();
                }
                for i in 0..5 {
                    row[3 + i] = e[i][c].value();
                }
                out.push(row);
            }
        }
        out
    }
}

fn words(len: usize) -> Vec<Word> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out.iter().flat_map(|w| (0..3u8).map(move |k| prepend(k, w))).collect();
    }
    out
}

/// Numeric rank with a singular-value threshold relative to the largest singular value.
/// Rows are scaled to unit length first; rows that are zero to working precision are dropped.
pub fn numeric_rank<T: Scalar>(rows: &[[T; 8]], tol: T) -> usize {
    let norms: Vec<T> = rows.iter().map(|r| Float::sqrt(r.iter().fold(T::zero(), |s, v| s + *v * *v))).collect();
    let max = norms.iter().fold(T::zero(), |m, v| Float::max(m, *v));
    if max.is_zero() || !Float::is_finite(max) {
        return 0;
    }
    let floor = max * T::eps() * T::of(1e4);
    let kept: Vec<usize> = (0..rows.len()).filter(|&i| norms[i] > floor).collect();
    if kept.is_empty() {
        return 0;
    }
    let m = DMatrix::<T>::from_fn(kept.len(), 8, |r, c| rows[kept[r]][c] / norms[kept[r]]);
    let sv = m.singular_values();
    let top = sv.iter().fold(T::zero(), |m, v| Float::max(m, *v));
    sv.iter().filter(|s| **s > tol * top).count()
}

/// Ranks of the Jacobians built from words of length `0 ..= n`.
pub fn rank_profile<T: Scalar>(f: &Expr, point: [T; 3], n: usize, tol: T) -> Result<Vec<usize>, EvalError> {
    let mut tower = Tower::new(f, point, n + 6)?;
    let mut rows = Vec::new();
    let mut ranks = Vec::new();
    for len in 0..=n {
        rows.extend(tower.rows(len));
        ranks.push(numeric_rank(&rows, tol));
    }
    Ok(ranks)
}

/// `8 - rank`, raising the word length from `order` until the rank no longer grows.
pub fn symmetry_dimension_estimate<T: Scalar>(
    f: &Expr,
    point: [T; 3],
    order: usize,
    tol: T,
) -> Result<SymmetryEstimate, EvalError> {
    let mut n = order.clamp(1, MAX_ORDER);
    loop {
        let ranks = rank_profile(f, point, n, tol)?;
        let stable = ranks[n] == ranks[n - 1];
        if stable || n == MAX_ORDER {
            return Ok(SymmetryEstimate { dimension: 8 - ranks[n], stabilized: stable, ranks });
        }
        n += 1;
    }
}

/// Median of [`symmetry_dimension_estimate`] over the point and four nearby points.
pub fn symmetry_dimension_median<T: Scalar>(
    f: &Expr,
    point: [T; 3],
    order: usize,
    tol: T,
) -> Result<SymmetryEstimate, EvalError> {
    let h = T::of(1e-2);
    let offsets = [[0.0, 0.0, 0.0], [1.0, -1.0, 0.5], [-0.5, 1.0, -1.0], [0.5, 0.5, 1.0], [-1.0, -0.5, -0.5]];
    let mut all = Vec::new();
    for o in offsets {
        let p = [point[0] + h * T::of(o[0]), point[1] + h * T::of(o[1]), point[2] + h * T::of(o[2])];
        all.push(symmetry_dimension_estimate(f, p, order, tol)?);
    }
    all.sort_by_key(|e| e.dimension);
    Ok(all.swap_remove(2))
}
