use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::assume::Assumptions;
use super::eval::Point;
use super::expr::{rational_to_f64, Expr};

/// Outcome of a zero-equivalence test.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TriBool {
    Zero,
    NonZero,
    Unknown,
}

impl TriBool {
    pub fn is_zero(self) -> bool {
        self == TriBool::Zero
    }

    pub fn is_nonzero(self) -> bool {
        self == TriBool::NonZero
    }

    pub fn is_unknown(self) -> bool {
        self == TriBool::Unknown
    }
}

/// Relative threshold below which a sampled value counts as zero.
pub const ZERO_THRESHOLD: f64 = 1e-9;

/// Draws up to `k` points from the assumptions box at which every declared positive quantity
/// is positive. Deterministic in the assumptions' seed and `salt`.
pub fn sample_points(a: &Assumptions, vars: &[super::expr::Symbol], k: usize, salt: u64) -> Vec<Point<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed() ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let ranges: Vec<(f64, f64)> = vars
        .iter()
        .map(|v| {
            let (lo, hi) = a.interval(v);
            (rational_to_f64(&lo), rational_to_f64(&hi))
        })
        .collect();
    let mut out = Vec::with_capacity(k);
    let mut attempts = 0;
    while out.len() < k && attempts < 40 * k.max(1) {
        attempts += 1;
        let mut p = Point::new();
        for (v, (lo, hi)) in vars.iter().zip(&ranges) {
            p.set(v, rng.random_range(*lo..=*hi));
        }
        if a.holds_at(&p) {
            out.push(p);
        }
    }
    out
}

/// Decides whether `e` vanishes identically on the assumptions box.
///
/// Zero when the normal form is the zero constant, or every sample is below
/// `1e-9 (1 + largest intermediate magnitude)`. Unknown when branch signs are undeclared or
/// more than half of the samples fail to evaluate.
pub fn is_zero(e: &Expr, a: &Assumptions) -> TriBool {
    is_zero_detailed(e, a).verdict
}

/// Zero test with the sampled evidence kept for reporting.
#[derive(Clone, Debug)]
pub struct ZeroTest {
    pub verdict: TriBool,
    pub undetermined: Vec<Expr>,
    pub failures: usize,
    pub largest_residual: f64,
}

pub fn is_zero_detailed(e: &Expr, a: &Assumptions) -> ZeroTest {
    let mut out = ZeroTest { verdict: TriBool::Zero, undetermined: Vec::new(), failures: 0, largest_residual: 0.0 };
    if e.is_zero_const() {
        return out;
    }
    if let Some(r) = e.as_rational() {
        out.verdict = if num_traits::Zero::is_zero(r) { TriBool::Zero } else { TriBool::NonZero };
        return out;
    }
    let (resolved, undetermined) = a.resolve_branches(e);
    if resolved.is_zero_const() {
        return out;
    }
    if !undetermined.is_empty() {
        out.verdict = TriBool::Unknown;
        out.undetermined = undetermined;
        return out;
    }
    let vars = resolved.free_symbols();
    let k = a.samples();
    let points = sample_points(a, &vars, k, 0);
    out.failures = k - points.len();
    let mut nonzero = false;
    for p in &points {
        match resolved.eval(p) {
            Ok(ev) => {
                let scale = 1.0 + ev.max_magnitude;
                let rel = ev.value.abs() / scale;
                out.largest_residual = out.largest_residual.max(rel);
                if ev.value.abs() > ZERO_THRESHOLD * scale {
                    nonzero = true;
                }
            }
            Err(_) => out.failures += 1,
        }
    }
    out.verdict = if 2 * out.failures > k {
        TriBool::Unknown
    } else if nonzero {
        TriBool::NonZero
    } else {
        TriBool::Zero
    };
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::parse::parse_default;

    #[test]
    fn trig_identity_is_zero() {
        let e = parse_default("sin(x)^2 + cos(x)^2 - 1").unwrap();
        assert_eq!(is_zero(&e, &Assumptions::new()), TriBool::Zero);
    }

    #[test]
    fn variable_is_nonzero() {
        assert_eq!(is_zero(&Expr::z(), &Assumptions::new()), TriBool::NonZero);
    }

    #[test]
    fn undeclared_branch_is_unknown() {
        let a = Assumptions::new()
            .with_interval("z", crate::Rational::from_integer((-1).into()), crate::Rational::from_integer(1.into()))
            .unwrap();
        let e = parse_default("abs(z) - z").unwrap();
        assert_eq!(is_zero(&e, &a), TriBool::Unknown);
    }
}
