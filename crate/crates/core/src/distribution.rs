//! Vector fields, distributions and Lie-algebra-valued path integration.

use nalgebra::{DMatrix, DVector};
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::forms::Form;
use crate::symbolic::{is_zero, Assumptions, Chart, EvalError, Expr, Point, TriBool};
use crate::Scalar;

#[derive(Debug, thiserror::Error)]
pub enum DistributionError {
    #[error("vector fields live on different charts")]
    ChartMismatch,
    #[error("expected {expected} components, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("the fields do not form a frame: {0}")]
    NotAFrame(String),
    #[error("distribution is given by {0}; this operation needs the other description")]
    Description(&'static str),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("integration lost invertibility at t = {0}")]
    Singular(f64),
    #[error("{0}")]
    Input(String),
}

/// `Σ cᵢ ∂/∂xᵢ` on a chart.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VectorField {
    pub chart: Chart,
    pub components: Vec<Expr>,
}

impl VectorField {
    pub fn new(chart: Chart, components: Vec<Expr>) -> Result<Self, DistributionError> {
        if components.len() != chart.dim() {
            return Err(DistributionError::Dimension { expected: chart.dim(), found: components.len() });
        }
        Ok(VectorField { chart, components })
    }

    /// The coordinate field `∂/∂xᵢ`.
    pub fn coordinate(chart: &Chart, i: usize) -> Self {
        let components = (0..chart.dim()).map(|k| if k == i { Expr::one() } else { Expr::zero() }).collect();
        VectorField { chart: chart.clone(), components }
    }

    /// `X f`.
    pub fn apply(&self, f: &Expr) -> Expr {
        self.chart
            .vars()
            .iter()
            .zip(&self.components)
            .filter(|(_, c)| !c.is_zero_const())
            .fold(Expr::zero(), |acc, (v, c)| acc + c * f.differentiate(v))
    }

    pub fn is_zero(&self, a: &Assumptions) -> TriBool {
        all_zero(self.components.iter().map(|c| is_zero(c, a)))
    }
}

impl std::fmt::Display for VectorField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let terms: Vec<String> = self
            .chart
            .vars()
            .iter()
            .zip(&self.components)
            .filter(|(_, c)| !c.is_zero_const())
            .map(|(v, c)| format!("({c}) d/d{}", v.name()))
            .collect();
        if terms.is_empty() {
            f.write_str("0")
        } else {
            f.write_str(&terms.join(" + "))
        }
    }
}

/// Conjunction of zero-test verdicts.
fn all_zero(it: impl IntoIterator<Item = TriBool>) -> TriBool {
    let mut out = TriBool::Zero;
    for t in it {
        match t {
            TriBool::NonZero => return TriBool::NonZero,
            TriBool::Unknown => out = TriBool::Unknown,
            TriBool::Zero => {}
        }
    }
    out
}

/// `[X, Y]` with components `X Yᵢ − Y Xᵢ`.
pub fn lie_bracket(x: &VectorField, y: &VectorField) -> Result<VectorField, DistributionError> {
    if x.chart != y.chart {
        return Err(DistributionError::ChartMismatch);
    }
    let components = x.components.iter().zip(&y.components).map(|(xi, yi)| x.apply(yi) - y.apply(xi)).collect();
    Ok(VectorField { chart: x.chart.clone(), components })
}

/// A distribution by generating fields or by annihilating 1-forms.
#[derive(Clone, Debug, PartialEq)]
pub enum DistributionSpec {
    Generators(Vec<VectorField>),
    Forms { chart: Chart, forms: Vec<Form> },
}

impl DistributionSpec {
    pub fn chart(&self) -> Option<&Chart> {
        match self {
            DistributionSpec::Generators(g) => g.first().map(|v| &v.chart),
            DistributionSpec::Forms { chart, .. } => Some(chart),
        }
    }

    /// Generators of the kernel of a single nonzero 1-form: `ω_p eᵢ − ωᵢ e_p` for a pivot `p`
    /// with `ω_p ≢ 0`.
    pub fn kernel_generators(&self, a: &Assumptions) -> Result<Vec<VectorField>, DistributionError> {
        let DistributionSpec::Forms { chart, forms } = self else {
            return Err(DistributionError::Description("generators"));
        };
        let [w] = forms.as_slice() else {
            return Err(DistributionError::Input("kernel generators are built for a single 1-form".into()));
        };
        let n = chart.dim();
        let coeff: Vec<Expr> = (0..n).map(|i| w.coeff(&[i])).collect();
        let p = (0..n)
            .find(|&i| is_zero(&coeff[i], a) == TriBool::NonZero)
            .ok_or_else(|| DistributionError::Input("the 1-form has no coefficient proven nonzero".into()))?;
        Ok((0..n)
            .filter(|&i| i != p)
            .map(|i| {
                let mut c = vec![Expr::zero(); n];
                c[i] = coeff[p].clone();
                c[p] = -&coeff[i];
                VectorField { chart: chart.clone(), components: c }
            })
            .collect())
    }
}

/// Determinant by cofactor expansion along the first row.
pub fn determinant(m: &[Vec<Expr>]) -> Expr {
    let n = m.len();
    match n {
        0 => Expr::one(),
        1 => m[0][0].clone(),
        2 => &m[0][0] * &m[1][1] - &m[0][1] * &m[1][0],
        _ => {
            let mut acc = Expr::zero();
            for j in 0..n {
                if m[0][j].is_zero_const() {
                    continue;
                }
                let minor: Vec<Vec<Expr>> = m[1..]
                    .iter()
                    .map(|row| row.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, e)| e.clone()).collect())
                    .collect();
                let term = &m[0][j] * determinant(&minor);
                acc = if j % 2 == 0 { acc + term } else { acc - term };
            }
            acc
        }
    }
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    if n < k {
        return Vec::new();
    }
    let mut out = combinations(n - 1, k);
    for mut c in combinations(n - 1, k - 1) {
        c.push(n - 1);
        out.push(c);
    }
    out
}

/// Whether `v` lies in the span of the pointwise independent fields `span`: every maximal minor of
/// the matrix with columns `span ∪ {v}` vanishes.
pub fn in_span(v: &VectorField, span: &[VectorField], a: &Assumptions) -> TriBool {
    let n = v.components.len();
    let k = span.len();
    if k >= n {
        return TriBool::Zero;
    }
    let cols: Vec<&VectorField> = span.iter().chain(std::iter::once(v)).collect();
    all_zero(combinations(n, k + 1).into_iter().map(|rows| {
        let m: Vec<Vec<Expr>> = rows.iter().map(|&r| cols.iter().map(|c| c.components[r].clone()).collect()).collect();
        is_zero(&determinant(&m), a)
    }))
}

/// Frobenius test: bracket closure for generators, `dωᵢ ∧ ω₁ ∧ … ∧ ωₙ = 0` for forms.
pub fn frobenius_integrable(d: &DistributionSpec, a: &Assumptions) -> Result<TriBool, DistributionError> {
    match d {
        DistributionSpec::Generators(g) => {
            let mut verdicts = Vec::new();
            for i in 0..g.len() {
                for j in i + 1..g.len() {
                    verdicts.push(in_span(&lie_bracket(&g[i], &g[j])?, g, a));
                }
            }
            Ok(all_zero(verdicts))
        }
        DistributionSpec::Forms { chart, forms } => {
            let Some(first) = forms.first() else { return Ok(TriBool::Zero) };
            let all = forms[1..].iter().fold(first.clone(), |acc, w| acc.wedge(w));
            let verdicts: Vec<TriBool> = forms
                .iter()
                .flat_map(|w| {
                    let top = w.d(chart).wedge(&all);
                    top.terms().map(|(_, c)| is_zero(c, a)).collect::<Vec<_>>()
                })
                .collect();
            Ok(all_zero(verdicts))
        }
    }
}

/// Coefficients of the top-degree forms `dωᵢ ∧ ω₁ ∧ … ∧ ωₙ`.
pub fn frobenius_forms(chart: &Chart, forms: &[Form]) -> Vec<Form> {
    let Some(first) = forms.first() else { return Vec::new() };
    let all = forms[1..].iter().fold(first.clone(), |acc, w| acc.wedge(w));
    forms.iter().map(|w| w.d(chart).wedge(&all)).collect()
}

fn generators(d: &DistributionSpec) -> Result<&[VectorField], DistributionError> {
    match d {
        DistributionSpec::Generators(g) => Ok(g),
        DistributionSpec::Forms { .. } => Err(DistributionError::Description("forms")),
    }
}

/// Whether `[X, Yᵢ]` lies in the distribution for every generator `Yᵢ`.
pub fn is_symmetry(x: &VectorField, d: &DistributionSpec, a: &Assumptions) -> Result<TriBool, DistributionError> {
    let g = generators(d)?;
    let mut verdicts = Vec::new();
    for y in g {
        verdicts.push(in_span(&lie_bracket(x, y)?, g, a));
    }
    Ok(all_zero(verdicts))
}

/// Whether `Yᵢ f = 0` for every generator.
pub fn is_first_integral(f: &Expr, d: &DistributionSpec, a: &Assumptions) -> Result<TriBool, DistributionError> {
    Ok(all_zero(generators(d)?.iter().map(|y| is_zero(&y.apply(f), a))))
}

/// `c[i][j][k]` with `[Xᵢ, Xⱼ] = −Σ c_ij^k X_k`.
pub fn structure_functions(frame: &[VectorField], a: &Assumptions) -> Result<Vec<Vec<Vec<Expr>>>, DistributionError> {
    let Some(first) = frame.first() else { return Ok(Vec::new()) };
    let n = first.chart.dim();
    if frame.len() != n {
        return Err(DistributionError::NotAFrame(format!("{} fields on a {n}-dimensional chart", frame.len())));
    }
    if frame.iter().any(|f| f.chart != first.chart) {
        return Err(DistributionError::ChartMismatch);
    }
    let column_matrix = |cols: &[&Vec<Expr>]| -> Vec<Vec<Expr>> {
        (0..n).map(|r| cols.iter().map(|c| c[r].clone()).collect()).collect()
    };
    let base: Vec<&Vec<Expr>> = frame.iter().map(|f| &f.components).collect();
    let det = determinant(&column_matrix(&base));
    if is_zero(&det, a) != TriBool::NonZero {
        return Err(DistributionError::NotAFrame("determinant not proven nonzero".into()));
    }
    let mut c = vec![vec![vec![Expr::zero(); n]; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let br = lie_bracket(&frame[i], &frame[j])?;
            for k in 0..n {
                let mut cols = base.clone();
                cols[k] = &br.components;
                let coeff = -(determinant(&column_matrix(&cols)) / &det);
                c[j][i][k] = -&coeff;
                c[i][j][k] = coeff;
            }
        }
    }
    Ok(c)
}

/// Constraint carried by a matrix path.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgebraConstraint {
    None,
    Traceless,
}

/// A curve of square matrices.
#[derive(Clone, Debug, PartialEq)]
pub enum MatrixPath<T: Scalar> {
    /// Entries as expressions in `t`.
    Closed { entries: Vec<Vec<Expr>>, constraint: AlgebraConstraint },
    /// Matrices on a strictly increasing grid, linearly interpolated in between.
    Sampled { times: Vec<T>, matrices: Vec<DMatrix<T>>, constraint: AlgebraConstraint },
}

impl<T: Scalar> MatrixPath<T> {
    pub fn closed(entries: Vec<Vec<Expr>>, constraint: AlgebraConstraint) -> Result<Self, DistributionError> {
        let n = entries.len();
        if entries.iter().any(|r| r.len() != n) {
            return Err(DistributionError::Input("matrix path must be square".into()));
        }
        Ok(MatrixPath::Closed { entries, constraint })
    }

    pub fn sampled(
        times: Vec<T>,
        matrices: Vec<DMatrix<T>>,
        constraint: AlgebraConstraint,
    ) -> Result<Self, DistributionError> {
        if times.len() != matrices.len() || times.is_empty() {
            return Err(DistributionError::Input("one matrix per grid time is required".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(DistributionError::Input("grid times must increase strictly".into()));
        }
        let n = matrices[0].nrows();
        if matrices.iter().any(|m| m.nrows() != n || m.ncols() != n) {
            return Err(DistributionError::Input("matrices must be square of one size".into()));
        }
        if constraint == AlgebraConstraint::Traceless {
            if let Some(i) = matrices.iter().position(|m| Float::abs(m.trace()).to_f64() > 1e-9) {
                return Err(DistributionError::Input(format!("sample {i} is not traceless")));
            }
        }
        Ok(MatrixPath::Sampled { times, matrices, constraint })
    }

    pub fn size(&self) -> usize {
        match self {
            MatrixPath::Closed { entries, .. } => entries.len(),
            MatrixPath::Sampled { matrices, .. } => matrices[0].nrows(),
        }
    }

    pub fn constraint(&self) -> AlgebraConstraint {
        match self {
            MatrixPath::Closed { constraint, .. } | MatrixPath::Sampled { constraint, .. } => *constraint,
        }
    }

    pub fn at(&self, t: T) -> Result<DMatrix<T>, DistributionError> {
        match self {
            MatrixPath::Closed { entries, .. } => {
                let p = Point::new().with("t", t);
                let n = entries.len();
                let mut m = DMatrix::zeros(n, n);
                for (i, row) in entries.iter().enumerate() {
                    for (j, e) in row.iter().enumerate() {
                        m[(i, j)] = e.eval(&p)?.value;
                    }
                }
                Ok(m)
            }
            MatrixPath::Sampled { times, matrices, .. } => {
                let i = times.partition_point(|s| *s <= t);
                if i == 0 {
                    return Ok(matrices[0].clone());
                }
                if i == times.len() {
                    return Ok(matrices[i - 1].clone());
                }
                let w = (t - times[i - 1]) / (times[i] - times[i - 1]);
                Ok(&matrices[i - 1] * (T::one() - w) + &matrices[i] * w)
            }
        }
    }
}

/// Samples of a matrix- or vector-valued solution.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<T: Scalar, V> {
    pub times: Vec<T>,
    pub values: Vec<V>,
}

fn grid<T: Scalar>(t0: T, t1: T, step: T) -> (usize, T) {
    let n = Float::ceil(Float::abs(t1 - t0) / step).to_f64().max(1.0) as usize;
    (n, (t1 - t0) / T::of(n as f64))
}

/// RK4 for `g′ = X(t) g` from `g(t₀) = g₀` (right-translation convention).
pub fn integrate_g_structure<T: Scalar>(
    x: &MatrixPath<T>,
    g0: &DMatrix<T>,
    t0: T,
    t1: T,
    step: T,
) -> Result<Trajectory<T, DMatrix<T>>, DistributionError> {
    let n = x.size();
    if g0.nrows() != n || g0.ncols() != n {
        return Err(DistributionError::Dimension { expected: n, found: g0.nrows() });
    }
    let det0 = g0.determinant();
    if det0.is_zero() {
        return Err(DistributionError::Singular(t0.to_f64()));
    }
    let (steps, dt) = grid(t0, t1, step);
    let half = dt / T::of(2.0);
    let mut g = g0.clone();
    let mut out = Trajectory { times: vec![t0], values: vec![g.clone()] };
    for i in 0..steps {
        let t = t0 + dt * T::of(i as f64);
        let (xa, xb, xc) = (x.at(t)?, x.at(t + half)?, x.at(t + dt)?);
        let k1 = &xa * &g;
        let k2 = &xb * (&g + &k1 * half);
        let k3 = &xb * (&g + &k2 * half);
        let k4 = &xc * (&g + &k3 * dt);
        g += (k1 + (k2 + k3) * T::of(2.0) + k4) * (dt / T::of(6.0));
        let det = g.determinant();
        if !Float::is_finite(det) || Float::abs(det) <= T::eps() * Float::abs(det0) {
            return Err(DistributionError::Singular((t + dt).to_f64()));
        }
        out.times.push(t + dt);
        out.values.push(g.clone());
    }
    Ok(out)
}

/// RK4 for the linear system `F′ = A(t) F` from `F(t₀) = f0`.
pub fn solve_linear<T: Scalar>(
    a: &MatrixPath<T>,
    f0: &DVector<T>,
    t0: T,
    t1: T,
    step: T,
) -> Result<Trajectory<T, DVector<T>>, DistributionError> {
    if f0.len() != a.size() {
        return Err(DistributionError::Dimension { expected: a.size(), found: f0.len() });
    }
    let (steps, dt) = grid(t0, t1, step);
    let half = dt / T::of(2.0);
    let mut f = f0.clone();
    let mut out = Trajectory { times: vec![t0], values: vec![f.clone()] };
    for i in 0..steps {
        let t = t0 + dt * T::of(i as f64);
        let (aa, ab, ac) = (a.at(t)?, a.at(t + half)?, a.at(t + dt)?);
        let k1 = &aa * &f;
        let k2 = &ab * (&f + &k1 * half);
        let k3 = &ab * (&f + &k2 * half);
        let k4 = &ac * (&f + &k3 * dt);
        f += (k1 + (k2 + k3) * T::of(2.0) + k4) * (dt / T::of(6.0));
        out.times.push(t + dt);
        out.values.push(f.clone());
    }
    Ok(out)
}

/// The solution with initial value `b` as the combination of `n` particular solutions sampled on
/// a common grid; the weights are fixed at the first grid time.
pub fn superposition_solve<T: Scalar>(
    particulars: &[Trajectory<T, DVector<T>>],
    b: &DVector<T>,
) -> Result<Trajectory<T, DVector<T>>, DistributionError> {
    let n = b.len();
    if particulars.len() != n {
        return Err(DistributionError::Dimension { expected: n, found: particulars.len() });
    }
    let times = particulars[0].times.clone();
    if particulars.iter().any(|p| p.times != times || p.values.iter().any(|v| v.len() != n)) {
        return Err(DistributionError::Input("particular solutions must share the grid and size".into()));
    }
    let m = DMatrix::from_fn(n, n, |r, c| particulars[c].values[0][r]);
    let weights =
        m.lu().solve(b).filter(|w| w.iter().all(|v| Float::is_finite(*v))).ok_or_else(|| {
            DistributionError::Input("initial vectors of the particular solutions are dependent".into())
        })?;
    let values = (0..times.len())
        .map(|i| particulars.iter().zip(weights.iter()).fold(DVector::zeros(n), |acc, (p, w)| acc + &p.values[i] * *w))
        .collect();
    Ok(Trajectory { times, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::parse;

    fn chart() -> Chart {
        Chart::default()
    }

    fn field(c: &[&str]) -> VectorField {
        let ch = chart();
        VectorField::new(ch.clone(), c.iter().map(|s| parse(s, &ch).unwrap()).collect()).unwrap()
    }

    fn asm() -> Assumptions {
        Assumptions::new()
    }

    #[test]
    fn brackets() {
        assert_eq!(
            lie_bracket(&field(&["1", "0", "0"]), &field(&["0", "1", "0"])).unwrap().is_zero(&asm()),
            TriBool::Zero
        );
        let b = lie_bracket(&field(&["1", "z", "0"]), &field(&["0", "0", "1"])).unwrap();
        assert_eq!(b.is_zero(&asm()), TriBool::NonZero);
        assert_eq!(in_span(&b, &[field(&["0", "-1", "0"])], &asm()), TriBool::Zero);
        assert_eq!(is_zero(&(&b.components[1] + Expr::one()), &asm()), TriBool::Zero);
        let b = lie_bracket(&field(&["x", "0", "0"]), &field(&["1", "0", "0"])).unwrap();
        assert_eq!(b.components[0], Expr::int(-1));
    }

    #[test]
    fn frobenius_examples() {
        let ch = chart();
        let contact = DistributionSpec::Forms {
            chart: ch.clone(),
            forms: vec![Form::one_form(&[-Expr::z(), Expr::one(), Expr::zero()])],
        };
        assert_eq!(frobenius_integrable(&contact, &asm()).unwrap(), TriBool::NonZero);
        assert_eq!(
            frobenius_forms(
                &ch,
                match &contact {
                    DistributionSpec::Forms { forms, .. } => forms,
                    _ => unreachable!(),
                }
            )[0]
            .coeff(&[0, 1, 2]),
            Expr::int(-1)
        );
        let dy = DistributionSpec::Forms { chart: ch.clone(), forms: vec![Form::basis(3, 1)] };
        assert_eq!(frobenius_integrable(&dy, &asm()).unwrap(), TriBool::Zero);
        let line = DistributionSpec::Generators(vec![field(&["1", "z", "z^2"])]);
        assert_eq!(frobenius_integrable(&line, &asm()).unwrap(), TriBool::Zero);
        let gens = contact.kernel_generators(&asm()).unwrap();
        assert_eq!(frobenius_integrable(&DistributionSpec::Generators(gens), &asm()).unwrap(), TriBool::NonZero);
    }

    #[test]
    fn symmetries_and_integrals() {
        let dx = DistributionSpec::Generators(vec![field(&["1", "0", "0"])]);
        assert_eq!(is_symmetry(&field(&["0", "1", "0"]), &dx, &asm()).unwrap(), TriBool::Zero);
        let contact = DistributionSpec::Generators(vec![field(&["1", "z", "0"]), field(&["0", "0", "1"])]);
        assert_eq!(is_symmetry(&field(&["0", "1", "0"]), &contact, &asm()).unwrap(), TriBool::Zero);
        assert_eq!(is_symmetry(&field(&["0", "0", "y"]), &dx, &asm()).unwrap(), TriBool::Zero);
        let dz = DistributionSpec::Generators(vec![field(&["0", "0", "1"])]);
        assert_eq!(is_symmetry(&field(&["z", "0", "0"]), &dz, &asm()).unwrap(), TriBool::NonZero);

        let p = |s: &str| parse(s, &chart()).unwrap();
        let dxdz = DistributionSpec::Generators(vec![field(&["1", "0", "0"]), field(&["0", "0", "1"])]);
        assert_eq!(is_first_integral(&p("y"), &dxdz, &asm()).unwrap(), TriBool::Zero);
        assert_eq!(is_first_integral(&p("y - z*x"), &dz, &asm()).unwrap(), TriBool::NonZero);
        let rot = DistributionSpec::Generators(vec![field(&["-y", "x", "0"])]);
        assert_eq!(is_first_integral(&p("x^2 + y^2"), &rot, &asm()).unwrap(), TriBool::Zero);
    }

    #[test]
    fn structure_function_examples() {
        let c =
            structure_functions(&[field(&["1", "0", "0"]), field(&["0", "1", "0"]), field(&["0", "0", "1"])], &asm())
                .unwrap();
        assert!(c.iter().flatten().flatten().all(|e| e.is_zero_const()));
        let c =
            structure_functions(&[field(&["1", "z", "0"]), field(&["0", "0", "1"]), field(&["0", "1", "0"])], &asm())
                .unwrap();
        assert_eq!(is_zero(&(&c[0][1][2] - Expr::one()), &asm()), TriBool::Zero);
        assert_eq!(is_zero(&(&c[1][0][2] + Expr::one()), &asm()), TriBool::Zero);
        let line = Chart::new(&["x"]);
        let xdx = VectorField::new(line.clone(), vec![Expr::x()]).unwrap();
        let dx = VectorField::coordinate(&line, 0);
        assert!(structure_functions(&[xdx, dx], &asm()).is_err());
    }

    fn tchart() -> Chart {
        Chart::new(&["t"])
    }

    fn path(rows: &[&[&str]], c: AlgebraConstraint) -> MatrixPath<f64> {
        let ch = tchart();
        MatrixPath::closed(rows.iter().map(|r| r.iter().map(|s| parse(s, &ch).unwrap()).collect()).collect(), c)
            .unwrap()
    }

    #[test]
    fn nilpotent_and_commuting_paths() {
        let x = path(&[&["0", "0", "0"], &["1", "0", "0"], &["0", "0", "0"]], AlgebraConstraint::Traceless);
        let g = integrate_g_structure(&x, &DMatrix::identity(3, 3), 0.0, 1.0, 1e-2).unwrap();
        let xm = x.at(0.0).unwrap();
        let want = DMatrix::identity(3, 3) + &xm + &xm * &xm * 0.5;
        assert!((g.values.last().unwrap() - want).abs().max() < 1e-12);

        let x = path(&[&["t", "0"], &["0", "-t"]], AlgebraConstraint::Traceless);
        let g = integrate_g_structure(&x, &DMatrix::identity(2, 2), 0.0, 1.5, 1e-3).unwrap();
        let end = g.values.last().unwrap();
        let e = (1.5f64 * 1.5 / 2.0).exp();
        assert!((end[(0, 0)] - e).abs() < 1e-8 && (end[(1, 1)] - 1.0 / e).abs() < 1e-8);
        assert!(g.values.iter().all(|m| (m.determinant() - 1.0).abs() < 1e-9));
    }

    #[test]
    fn rotation_superposition() {
        let a = path(&[&["0", "1"], &["-1", "0"]], AlgebraConstraint::Traceless);
        let tau = std::f64::consts::TAU;
        let e = |i: usize| DVector::from_fn(2, |r, _| if r == i { 1.0 } else { 0.0 });
        let parts: Vec<_> = (0..2).map(|i| solve_linear(&a, &e(i), 0.0, tau, 1e-3).unwrap()).collect();
        let b = DVector::from_vec(vec![0.3, -1.7]);
        let sup = superposition_solve(&parts, &b).unwrap();
        let direct = solve_linear(&a, &b, 0.0, tau, 1e-3).unwrap();
        let err = sup.values.iter().zip(&direct.values).map(|(u, v)| (u - v).norm()).fold(0.0, f64::max);
        assert!(err < 1e-8);
        assert!(superposition_solve(&[parts[0].clone(), parts[0].clone()], &b).is_err());
    }
}
