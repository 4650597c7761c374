//! Differential forms with symbolic coefficients on a coordinate chart.

use std::collections::BTreeMap;

use crate::symbolic::{Chart, Expr};

/// A homogeneous differential form `Σ c_I dx^I` over a chart, `I` strictly increasing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Form {
    dim: usize,
    degree: usize,
    coeffs: BTreeMap<Vec<usize>, Expr>,
}

/// Sign of the permutation sorting `idx`, or `None` if an index repeats.
fn sort_sign(idx: &mut [usize]) -> Option<i64> {
    let mut sign = 1;
    for i in 1..idx.len() {
        let mut j = i;
        while j > 0 && idx[j - 1] > idx[j] {
            idx.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if idx.windows(2).any(|w| w[0] == w[1]) {
        None
    } else {
        Some(sign)
    }
}

impl Form {
    pub fn zero(dim: usize, degree: usize) -> Self {
        Form { dim, degree, coeffs: BTreeMap::new() }
    }

    /// The 0-form `f`.
    pub fn function(dim: usize, f: Expr) -> Self {
        let mut out = Form::zero(dim, 0);
        out.insert(Vec::new(), f);
        out
    }

    /// `Σ c_i dx^i`.
    pub fn one_form(coeffs: &[Expr]) -> Self {
        let mut out = Form::zero(coeffs.len(), 1);
        for (i, c) in coeffs.iter().enumerate() {
            out.insert(vec![i], c.clone());
        }
        out
    }

    /// The coordinate differential `dx^i`.
    pub fn basis(dim: usize, i: usize) -> Self {
        let mut out = Form::zero(dim, 1);
        out.insert(vec![i], Expr::one());
        out
    }

    fn insert(&mut self, idx: Vec<usize>, c: Expr) {
        if c.is_zero_const() {
            return;
        }
        let entry = self.coeffs.entry(idx);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = o.get() + &c;
                if s.is_zero_const() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Coefficient of `dx^I` for strictly increasing `I`.
    pub fn coeff(&self, idx: &[usize]) -> Expr {
        self.coeffs.get(idx).cloned().unwrap_or_else(Expr::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<usize>, &Expr)> {
        self.coeffs.iter()
    }

    pub fn is_zero_form(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn add(&self, other: &Form) -> Form {
        assert_eq!((self.dim, self.degree), (other.dim, other.degree), "form shapes differ");
        let mut out = self.clone();
        for (i, c) in &other.coeffs {
            out.insert(i.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Form) -> Form {
        self.add(&other.scale(&Expr::int(-1)))
    }

    pub fn scale(&self, f: &Expr) -> Form {
        let mut out = Form::zero(self.dim, self.degree);
        for (i, c) in &self.coeffs {
            out.insert(i.clone(), c * f);
        }
        out
    }

    pub fn wedge(&self, other: &Form) -> Form {
        assert_eq!(self.dim, other.dim, "forms live on different charts");
        let mut out = Form::zero(self.dim, self.degree + other.degree);
        for (i, a) in &self.coeffs {
            for (j, b) in &other.coeffs {
                let mut idx: Vec<usize> = i.iter().chain(j.iter()).copied().collect();
                if let Some(s) = sort_sign(&mut idx) {
                    out.insert(idx, Expr::int(s) * a * b);
                }
            }
        }
        out
    }

    /// Exterior derivative with respect to the chart coordinates.
    pub fn d(&self, chart: &Chart) -> Form {
        assert_eq!(chart.dim(), self.dim, "chart dimension mismatch");
        let mut out = Form::zero(self.dim, self.degree + 1);
        for (i, c) in &self.coeffs {
            for (j, v) in chart.vars().iter().enumerate() {
                let dc = c.differentiate(v);
                if dc.is_zero_const() {
                    continue;
                }
                let mut idx = vec![j];
                idx.extend(i.iter().copied());
                if let Some(s) = sort_sign(&mut idx) {
                    out.insert(idx, Expr::int(s) * dc);
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contact_form_wedge() {
        let chart = Chart::default();
        let w = Form::one_form(&[-Expr::z(), Expr::one(), Expr::zero()]);
        let top = w.d(&chart).wedge(&w);
        assert_eq!(top.coeff(&[0, 1, 2]), Expr::int(-1));
    }

    #[test]
    fn d_squared_vanishes() {
        let chart = Chart::default();
        let f = Expr::x() * Expr::y().exp() + Expr::z().powi(3) * Expr::x();
        let ddf = Form::function(3, f).d(&chart).d(&chart);
        assert!(ddf.is_zero_form());
    }
}
