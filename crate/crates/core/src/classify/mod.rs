//! Classification of equations with a three-dimensional symmetry algebra.
//!
//! The zero tests on `a` and `d` pick the branch; the semi-invariants are then evaluated at a set
//! of sample points and the resulting absolute invariants are matched against the tables of
//! canonical forms.

pub mod normalize;
pub mod symmetry;
pub mod transform;

use std::fmt;

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cartan::{curvature_scalars, f1_in, scalar_a, scalar_d, CartanFlags, Derivatives, ScalarVanishing};
use crate::jet::{expand, Jet};
use crate::symbolic::expr::rational_to_f64;
use crate::symbolic::{Assumptions, EvalError, Expr, Point, Symbol, TriBool};
use crate::{Rational, Real, Scalar};

pub use normalize::{
    apply_f1, apply_h1, degenerate_invariants, h1_matrix, h1_matrix_checked, invariant_i1, invariant_i2, normalize_f1,
    normalize_h1, DegenerateSemiInvariants, GenericSemiInvariants, NormalizationError,
};
pub use symmetry::{symmetry_dimension_estimate, symmetry_dimension_median, SymmetryEstimate};
pub use transform::PointTransform;

/// Family tags of the classification.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "linearizable")]
    Linearizable,
    #[serde(rename = "3a")]
    A3,
    #[serde(rename = "3b")]
    B3,
    #[serde(rename = "3c")]
    C3,
    #[serde(rename = "3d+")]
    DPlus,
    #[serde(rename = "3d-")]
    DMinus,
    #[serde(rename = "3e+")]
    EPlus,
    #[serde(rename = "3e-")]
    EMinus,
    #[serde(rename = "3f")]
    F3,
    #[serde(rename = "3g")]
    G3,
    #[serde(rename = "dual-cubic-3d-family")]
    DualCubic,
    #[serde(rename = "dim<=2-undetermined")]
    Undetermined,
    #[serde(rename = "undecided")]
    Undecided,
}

impl Family {
    pub fn tag(self) -> &'static str {
        match self {
            Family::Linearizable => "linearizable",
            Family::A3 => "3a",
            Family::B3 => "3b",
            Family::C3 => "3c",
            Family::DPlus => "3d+",
            Family::DMinus => "3d-",
            Family::EPlus => "3e+",
            Family::EMinus => "3e-",
            Family::F3 => "3f",
            Family::G3 => "3g",
            Family::DualCubic => "dual-cubic-3d-family",
            Family::Undetermined => "dim<=2-undetermined",
            Family::Undecided => "undecided",
        }
    }

    pub fn from_tag(s: &str) -> Option<Family> {
        ALL_FAMILIES.iter().copied().find(|f| f.tag() == s)
    }

    /// Symmetry dimension implied by the tag, if any.
    pub fn dimension(self) -> Option<usize> {
        match self {
            Family::Linearizable => Some(8),
            Family::Undetermined | Family::Undecided => None,
            _ => Some(3),
        }
    }
}

const ALL_FAMILIES: [Family; 13] = [
    Family::Linearizable,
    Family::A3,
    Family::B3,
    Family::C3,
    Family::DPlus,
    Family::DMinus,
    Family::EPlus,
    Family::EMinus,
    Family::F3,
    Family::G3,
    Family::DualCubic,
    Family::Undetermined,
    Family::Undecided,
];

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// How the two reported parameter values are related.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pairing {
    /// `{α, 3 − α}`
    ThreeMinus,
    /// `{α, −α}`
    Negation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    pub alpha: [Real; 2],
    pub pairing: Pairing,
}

impl Parameters {
    fn three_minus(alpha: Real) -> Self {
        let (lo, hi) = if alpha <= 3.0 - alpha { (alpha, 3.0 - alpha) } else { (3.0 - alpha, alpha) };
        Parameters { alpha: [lo, hi], pairing: Pairing::ThreeMinus }
    }

    fn negation(alpha: Real) -> Self {
        let a = alpha.abs();
        Parameters { alpha: [a, -a], pairing: Pairing::Negation }
    }

    /// Whether both parameter sets agree to the relative tolerance.
    pub fn agrees_with(&self, o: &Parameters, tol: Real) -> bool {
        self.pairing == o.pairing
            && self.alpha.iter().zip(&o.alpha).all(|(a, b)| (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0))
    }
}

/// Sign as `-1`, `0`, `1`.
pub fn sign_of<T: Scalar>(v: T) -> i8 {
    if v > T::zero() {
        1
    } else if v < T::zero() {
        -1
    } else {
        0
    }
}

/// Per-point data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    #[serde(with = "crate::serial::rational_triple")]
    pub point: [Rational; 3],
    pub a: Real,
    pub d: Real,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generic: Option<GenericSemiInvariants<Real>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degenerate: Option<DegenerateSemiInvariants<Real>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub i1: Option<Real>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub i2: Option<Real>,
}

/// Invariant values agreed on by all sample points, with the signs used by the tables.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InvariantSummary {
    pub i1: Option<Real>,
    pub i2: Option<Real>,
    pub sign_ad: Option<i8>,
    pub sign_s3: Option<i8>,
    pub sign_s12: Option<i8>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub family: Family,
    pub flags: CartanFlags,
    pub vanishing: ScalarVanishing,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parameters: Option<Parameters>,
    pub invariants: InvariantSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub symmetry: Option<SymmetryEstimate>,
    pub points: Vec<PointRecord>,
    pub trace: Vec<String>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassifyOptions {
    pub points: usize,
    /// Relative tolerance for table matches and for agreement across points.
    pub tol: Real,
    pub estimate_dimension: bool,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions { points: 5, tol: 1e-8, estimate_dimension: true }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ClassifyError {
    #[error(transparent)]
    Normalization(#[from] NormalizationError),
    #[error("no usable sample point in the assumptions box")]
    NoSamplePoints,
}

const GRID: i64 = 97;

/// Rational points on a grid inside the box where the declared positive quantities hold and
/// `f` evaluates. Deterministic in the assumptions' seed.
pub fn sample_points(f: &Expr, asm: &Assumptions, count: usize) -> Vec<[Rational; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(asm.seed() ^ 0x5EED_C1A5_51F1_ED00);
    let bounds: Vec<(Rational, Rational)> = ["x", "y", "z"].iter().map(|v| asm.interval(&Symbol::new(v))).collect();
    let mut out: Vec<[Rational; 3]> = Vec::new();
    let mut attempts = 0;
    while out.len() < count && attempts < 200 * count.max(1) {
        attempts += 1;
        let p: [Rational; 3] = std::array::from_fn(|i| {
            let (lo, hi) = &bounds[i];
            let k = rng.random_range(1..GRID);
            lo + (hi - lo) * Rational::new(BigInt::from(k), BigInt::from(GRID))
        });
        if out.contains(&p) {
            continue;
        }
        let fp = to_point(&p);
        if !asm.holds_at(&fp) || f.eval(&fp).map(|v| !v.value.is_finite()).unwrap_or(true) {
            continue;
        }
        out.push(p);
    }
    out
}

fn to_point(p: &[Rational; 3]) -> Point<f64> {
    Point::from_pairs(&[("x", rational_to_f64(&p[0])), ("y", rational_to_f64(&p[1])), ("z", rational_to_f64(&p[2]))])
}

fn to_base<T: Scalar>(p: &[Rational; 3]) -> [T; 3] {
    std::array::from_fn(|i| T::from_rational(&p[i]))
}

/// `a`, `d` and the 2×5 matrix of their first derivatives at a point.
pub fn f1_at<T: Scalar>(f: &Expr, point: [T; 3]) -> Result<(T, T, [[T; 5]; 2]), EvalError> {
    let mut dv = Derivatives::new(expand(f, point, 7)?);
    let a = scalar_a(&mut dv);
    let d = scalar_d(&mut dv);
    let m = f1_in(&mut dv, &a, &d);
    Ok((a.value(), d.value(), m.map(|row| row.map(|j: Jet<T>| j.value()))))
}

/// `a` and the 4×8 matrix of derivatives of `(a, a1, a2, a3)` at a point.
pub fn h1_at<T: Scalar>(f: &Expr, point: [T; 3]) -> Result<(T, [[T; 8]; 4]), EvalError> {
    let mut dv = Derivatives::new(expand(f, point, 9)?);
    let h = normalize::h1_in(&mut dv);
    let a = scalar_a(&mut dv);
    Ok((a.value(), h.map(|row| row.map(|j: Jet<T>| j.value()))))
}

/// Semi-invariants of the generic branch at a point.
pub fn generic_semi_invariants<T: Scalar>(f: &Expr, point: [T; 3]) -> Result<GenericSemiInvariants<T>, ClassifyError> {
    let (a, d, m) = f1_at(f, point).map_err(|_| NormalizationError::Degenerate("regular point"))?;
    Ok(normalize_f1(&m, a, d)?)
}

/// Semi-invariants of the degenerate branch at a point.
pub fn degenerate_semi_invariants<T: Scalar>(
    f: &Expr,
    point: [T; 3],
) -> Result<DegenerateSemiInvariants<T>, ClassifyError> {
    let (a, h) = h1_at(f, point).map_err(|_| NormalizationError::Degenerate("regular point"))?;
    Ok(normalize_h1(&h, a)?)
}

fn close(a: Real, b: Real, tol: Real) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// The common value if all entries agree to `tol`.
fn common(values: &[Real], tol: Real) -> Option<Real> {
    let first = *values.first()?;
    values.iter().all(|v| close(*v, first, tol)).then(|| values.iter().sum::<Real>() / values.len() as Real)
}

fn common_sign(values: &[i8]) -> Option<i8> {
    let first = *values.first()?;
    values.iter().all(|v| *v == first && *v != 0).then_some(first)
}

/// Table lookup from `I1` (generic branch with `s1 s2 ≠ 0`).
pub fn family_from_i1(i1: Real, tol: Real) -> (Family, Option<Parameters>) {
    let c = 41.0 / 256.0;
    if close(i1, c, tol) {
        return (Family::C3, None);
    }
    if i1 > c {
        let m = (96.0 - 576.0 * i1) / (256.0 * i1 - 41.0);
        let alpha = (3.0 + (9.0 + 4.0 * m).max(0.0).sqrt()) / 2.0;
        (Family::A3, Some(Parameters::three_minus(alpha)))
    } else {
        let alpha = (15.0 / (41.0 - 256.0 * i1)).sqrt();
        (Family::B3, Some(Parameters::negation(alpha)))
    }
}

/// Table lookup from `I2` and the signs of `a d` and `s3` (generic branch with `s1 = s2 = 0`).
pub fn family_from_i2(i2: Real, sign_ad: i8, sign_s3: i8, tol: Real) -> (Family, Option<Parameters>) {
    let c = 1.0 / 36.0;
    if close(i2, c, tol) {
        return if sign_s3 < 0 {
            (Family::A3, Some(Parameters::three_minus(1.5)))
        } else {
            (Family::B3, Some(Parameters::negation(0.0)))
        };
    }
    if i2 > c {
        if sign_s3 < 0 {
            let alpha = (1.0 / (36.0 * i2 - 1.0)).sqrt();
            (Family::EMinus, Some(Parameters::negation(alpha)))
        } else {
            // the 3g representative has 36 I2 = (α² + 4)/α²
            let alpha = (4.0 / (36.0 * i2 - 1.0)).sqrt();
            (Family::G3, Some(Parameters::negation(alpha)))
        }
    } else {
        let alpha = (1.0 / (1.0 - 36.0 * i2)).sqrt();
        let fam = if (sign_ad < 0) == (sign_s3 > 0) { Family::EPlus } else { Family::F3 };
        (fam, Some(Parameters::negation(alpha)))
    }
}

/// Runs the decision procedure on `f`.
pub fn classify(f: &Expr, asm: &Assumptions, opts: &ClassifyOptions) -> Result<ClassificationReport, ClassifyError> {
    let scalars = curvature_scalars(f);
    let vanishing = ScalarVanishing::of(&scalars, asm);
    let flags = vanishing.flags();
    let mut report = ClassificationReport {
        family: Family::Undecided,
        flags,
        vanishing,
        parameters: None,
        invariants: InvariantSummary::default(),
        symmetry: None,
        points: Vec::new(),
        trace: Vec::new(),
        warnings: Vec::new(),
    };
    report.trace.push(format!("is_zero(a) = {:?}, is_zero(d) = {:?}", vanishing.a, vanishing.d));

    let candidates = sample_points(f, asm, 4 * opts.points + 8);
    if candidates.is_empty() {
        return Err(ClassifyError::NoSamplePoints);
    }
    if opts.estimate_dimension {
        match symmetry_dimension_median(f, to_base::<Real>(&candidates[0]), symmetry::DEFAULT_ORDER, 1e-7) {
            Ok(e) => report.symmetry = Some(e),
            Err(e) => report.warnings.push(format!("symmetry estimate failed: {e}")),
        }
    }

    match (vanishing.a, vanishing.d) {
        (TriBool::Unknown, _) | (_, TriBool::Unknown) => {
            let failing = if vanishing.a.is_unknown() { "is_zero(a)" } else { "is_zero(d)" };
            report.warnings.push(format!("{failing} is undecided"));
            report.trace.push(format!("stopped: {failing} returned Unknown"));
        }
        (TriBool::Zero, TriBool::Zero) => {
            report.family = Family::Linearizable;
            report.trace.push("a = d = 0: linearizable".into());
        }
        (TriBool::Zero, TriBool::NonZero) => {
            report.family = Family::DualCubic;
            report.trace.push("a = 0, d != 0: dual of the 3d family, 3e+ (alpha = ±1) or 3f (alpha = ±1)".into());
            for p in candidates.iter().take(opts.points) {
                let (a, d, _) =
                    f1_at::<Real>(f, to_base(p)).map_err(|_| NormalizationError::Degenerate("regular point"))?;
                report.points.push(PointRecord {
                    point: p.clone(),
                    a,
                    d,
                    generic: None,
                    degenerate: None,
                    i1: None,
                    i2: None,
                });
            }
        }
        (TriBool::NonZero, TriBool::Zero) => degenerate_branch(f, asm, opts, &candidates, &mut report)?,
        (TriBool::NonZero, TriBool::NonZero) => generic_branch(f, opts, &candidates, &mut report)?,
    }

    if let (Some(dim), Some(est)) = (report.family.dimension(), &report.symmetry) {
        if est.stabilized && est.dimension != dim {
            report
                .warnings
                .push(format!("symmetry estimate {} differs from the family dimension {dim}", est.dimension));
        }
    }
    Ok(report)
}

fn generic_branch(
    f: &Expr,
    opts: &ClassifyOptions,
    candidates: &[[Rational; 3]],
    report: &mut ClassificationReport,
) -> Result<(), ClassifyError> {
    report.trace.push("a != 0, d != 0: normalizing the first derivatives of (a, d)".into());
    let mut zero_s12 = Vec::new();
    for p in candidates {
        if report.points.len() == opts.points {
            break;
        }
        let Ok((a, d, m)) = f1_at::<Real>(f, to_base(p)) else { continue };
        if a == 0.0 || d == 0.0 || !a.is_finite() || !d.is_finite() {
            continue;
        }
        let s = normalize_f1(&m, a, d)?;
        let scale = m[0].iter().fold(a.abs(), |acc, v| acc.max(v.abs())).max(1.0);
        let degenerate = s.s1.abs() <= opts.tol * scale && s.s2.abs() <= opts.tol * scale;
        zero_s12.push(degenerate);
        let i1 = (!degenerate).then(|| invariant_i1(&s));
        let i2 = (s.s3 != 0.0).then(|| invariant_i2(&s));
        report.points.push(PointRecord { point: p.clone(), a, d, generic: Some(s), degenerate: None, i1, i2 });
    }
    if report.points.is_empty() {
        return Err(ClassifyError::NoSamplePoints);
    }
    if report.points.len() < opts.points {
        report.warnings.push(format!("only {} regular sample points", report.points.len()));
    }
    let sign_ad: Vec<i8> = report.points.iter().map(|r| sign_of(r.a * r.d)).collect();
    let sign_s3: Vec<i8> = report.points.iter().map(|r| sign_of(r.generic.unwrap().s3)).collect();
    report.invariants.sign_ad = common_sign(&sign_ad);
    report.invariants.sign_s3 = common_sign(&sign_s3);

    if zero_s12.iter().all(|z| !z) {
        let i1s: Vec<Real> = report.points.iter().map(|r| r.i1.unwrap()).collect();
        match common(&i1s, opts.tol) {
            Some(i1) => {
                report.invariants.i1 = Some(i1);
                let (fam, params) = family_from_i1(i1, opts.tol);
                report.trace.push(format!("s1 s2 != 0, I1 = {i1} at every point: {fam}"));
                report.family = fam;
                report.parameters = params;
            }
            None => undetermined(report, "I1 is not constant across the sample points"),
        }
    } else if zero_s12.iter().all(|z| *z) {
        let i2s: Option<Vec<Real>> = report.points.iter().map(|r| r.i2).collect();
        let Some(i2s) = i2s else {
            undetermined(report, "s1 = s2 = s3 = 0");
            return Ok(());
        };
        let (Some(sad), Some(ss3)) = (report.invariants.sign_ad, report.invariants.sign_s3) else {
            undetermined(report, "sign of a d or s3 changes across the sample points");
            return Ok(());
        };
        match common(&i2s, opts.tol) {
            Some(i2) => {
                report.invariants.i2 = Some(i2);
                let (fam, params) = family_from_i2(i2, sad, ss3, opts.tol);
                report.trace.push(format!("s1 = s2 = 0, I2 = {i2}, signs ({sad:+}, {ss3:+}): {fam}"));
                report.family = fam;
                report.parameters = params;
            }
            None => undetermined(report, "I2 is not constant across the sample points"),
        }
    } else {
        undetermined(report, "s1 = s2 = 0 holds at some sample points only");
    }
    Ok(())
}

fn degenerate_branch(
    f: &Expr,
    asm: &Assumptions,
    opts: &ClassifyOptions,
    candidates: &[[Rational; 3]],
    report: &mut ClassificationReport,
) -> Result<(), ClassifyError> {
    report.trace.push("d = 0, a != 0: degenerate branch".into());
    h1_matrix_checked(f, asm)?;
    report.trace.push("bracket relations of the second derivatives hold".into());
    for p in candidates {
        if report.points.len() == opts.points {
            break;
        }
        let Ok((a, h)) = h1_at::<Real>(f, to_base(p)) else { continue };
        if a == 0.0 || !a.is_finite() {
            continue;
        }
        let s = normalize_h1(&h, a)?;
        let (i1, i2) = degenerate_invariants(&s);
        report.points.push(PointRecord {
            point: p.clone(),
            a,
            d: 0.0,
            generic: None,
            degenerate: Some(s),
            i1: Some(i1),
            i2: Some(i2),
        });
    }
    if report.points.is_empty() {
        return Err(ClassifyError::NoSamplePoints);
    }
    let i1s: Vec<Real> = report.points.iter().map(|r| r.i1.unwrap()).collect();
    let i2s: Vec<Real> = report.points.iter().map(|r| r.i2.unwrap()).collect();
    let s12: Vec<i8> = report.points.iter().map(|r| sign_of(r.degenerate.unwrap().s12)).collect();
    report.invariants.sign_s12 = common_sign(&s12);
    let (Some(i1), Some(i2)) = (common(&i1s, opts.tol), common(&i2s, opts.tol)) else {
        undetermined(report, "degenerate invariants are not constant across the sample points");
        return Ok(());
    };
    report.invariants.i1 = Some(i1);
    report.invariants.i2 = Some(i2);
    if !close(i1, 25.0 / 12.0, opts.tol) || !close(i2, -5.0 / 4.0, opts.tol) {
        undetermined(report, &format!("(I1, I2) = ({i1}, {i2}) differs from (25/12, -5/4)"));
        return Ok(());
    }
    match report.invariants.sign_s12 {
        Some(s) => {
            report.family = if s > 0 { Family::DPlus } else { Family::DMinus };
            report.trace.push(format!("I1 = 25/12, I2 = -5/4, sign(s12) = {s:+}: {}", report.family));
        }
        None => undetermined(report, "sign of s12 changes across the sample points"),
    }
    Ok(())
}

fn undetermined(report: &mut ClassificationReport, why: &str) {
    report.family = Family::Undetermined;
    report.parameters = None;
    report.trace.push(format!("{why}: symmetry dimension at most 2"));
}

#[cfg(test)]
mod tests;
