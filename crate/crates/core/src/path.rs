//! Matrix-valued functions of time.
//!
//! [`MatrixPath`] stores samples on a uniform grid. Node derivatives come
//! from fourth-order finite differences (one-sided near the ends), and
//! values between nodes from quintic Hermite interpolation of the samples
//! and their first two derivatives. [`TimeMatrix`] unifies sampled paths,
//! expression matrices and closures so that callers can ask for values,
//! time derivatives and hyper-dual lifts without caring about the source.

use std::fmt;
use std::io::{Read, Write};
use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::expr::{parse, Expression, HyperDual, Scalar};

/// Fewest nodes for which finite-difference derivatives are defined.
pub const MIN_FD_NODES: usize = 7;

/// Quintic Hermite basis coefficients in `s⁰..s⁵`, ordered as
/// `[p0, h·v0, h²·a0, h²·a1, h·v1, p1]`.
const HERMITE: [[f64; 6]; 6] = [
    [1.0, 0.0, 0.0, -10.0, 15.0, -6.0],
    [0.0, 1.0, 0.0, -6.0, 8.0, -3.0],
    [0.0, 0.0, 0.5, -1.5, 1.5, -0.5],
    [0.0, 0.0, 0.0, 0.5, -1.0, 0.5],
    [0.0, 0.0, 0.0, -4.0, 7.0, -3.0],
    [0.0, 0.0, 0.0, 10.0, -15.0, 6.0],
];

fn poly_derivative_at(coeffs: &[f64; 6], s: f64, order: usize) -> f64 {
    let mut acc = 0.0;
    for (k, &c) in coeffs.iter().enumerate().skip(order) {
        let mut falling = 1.0;
        for j in 0..order {
            falling *= (k - j) as f64;
        }
        acc += c * falling * s.powi((k - order) as i32);
    }
    acc
}

/// First and second derivatives at every node.
pub type NodeDerivatives = (Vec<DMatrix<f64>>, Vec<DMatrix<f64>>);

/// A square or rectangular matrix sampled on a uniform time grid.
#[derive(Clone)]
pub struct MatrixPath {
    t0: f64,
    h: f64,
    rows: usize,
    cols: usize,
    samples: Vec<DMatrix<f64>>,
    node_derivs: OnceLock<NodeDerivatives>,
}

impl fmt::Debug for MatrixPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MatrixPath")
            .field("t0", &self.t0)
            .field("t1", &self.t1())
            .field("h", &self.h)
            .field("shape", &(self.rows, self.cols))
            .field("nodes", &self.samples.len())
            .finish()
    }
}

impl MatrixPath {
    pub fn new(t0: f64, h: f64, samples: Vec<DMatrix<f64>>) -> Result<Self> {
        if !h.is_finite() || h <= 0.0 {
            return Err(Error::BadStep(h));
        }
        if samples.len() < 2 {
            return Err(Error::GridTooCoarse { points: samples.len(), min: 2 });
        }
        let (rows, cols) = samples[0].shape();
        if samples.iter().any(|m| m.shape() != (rows, cols)) {
            return Err(Error::Dimension("path samples differ in shape".into()));
        }
        Ok(Self { t0, h, rows, cols, samples, node_derivs: OnceLock::new() })
    }

    /// Samples `f` on the grid `t0, t0 + h', ..., t1`, where `h'` is the
    /// nearest step dividing the window evenly.
    pub fn from_fn(
        t0: f64,
        t1: f64,
        h: f64,
        mut f: impl FnMut(f64) -> Result<DMatrix<f64>>,
    ) -> Result<Self> {
        if h.is_nan() || h <= 0.0 {
            return Err(Error::BadStep(h));
        }
        let steps = crate::linalg::step_count(t0, t1, h);
        let step = (t1 - t0) / steps as f64;
        let samples = (0..=steps).map(|k| f(t0 + k as f64 * step)).collect::<Result<Vec<_>>>()?;
        Self::new(t0, step, samples)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t1(&self) -> f64 {
        self.time(self.samples.len() - 1)
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.h
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.samples.len()).map(|i| self.time(i))
    }

    pub fn samples(&self) -> &[DMatrix<f64>] {
        &self.samples
    }

    pub fn sample(&self, i: usize) -> &DMatrix<f64> {
        &self.samples[i]
    }

    pub fn last(&self) -> &DMatrix<f64> {
        self.samples.last().expect("paths hold at least two samples")
    }

    /// Applies `f` node by node.
    pub fn map(&self, mut f: impl FnMut(f64, &DMatrix<f64>) -> DMatrix<f64>) -> Result<Self> {
        let samples = self.samples.iter().enumerate().map(|(i, m)| f(self.time(i), m)).collect();
        Self::new(self.t0, self.h, samples)
    }

    /// Fourth-order finite-difference first and second derivatives at nodes.
    pub fn node_derivatives(&self) -> Result<&NodeDerivatives> {
        let n = self.samples.len();
        if n < MIN_FD_NODES {
            return Err(Error::GridTooCoarse { points: n, min: MIN_FD_NODES });
        }
        Ok(self.node_derivs.get_or_init(|| {
            let f = &self.samples;
            let h = self.h;
            let lin = |coeffs: &[(usize, f64)], scale: f64| {
                let mut acc = DMatrix::zeros(self.rows, self.cols);
                for &(i, c) in coeffs {
                    acc += &f[i] * c;
                }
                acc * scale
            };
            let d1 = (0..n)
                .map(|i| {
                    let s = 1.0 / (12.0 * h);
                    match i {
                        0 => lin(&[(0, -25.0), (1, 48.0), (2, -36.0), (3, 16.0), (4, -3.0)], s),
                        1 => lin(&[(0, -3.0), (1, -10.0), (2, 18.0), (3, -6.0), (4, 1.0)], s),
                        _ if i == n - 2 => lin(
                            &[(n - 1, 3.0), (n - 2, 10.0), (n - 3, -18.0), (n - 4, 6.0), (n - 5, -1.0)],
                            s,
                        ),
                        _ if i == n - 1 => lin(
                            &[(n - 1, 25.0), (n - 2, -48.0), (n - 3, 36.0), (n - 4, -16.0), (n - 5, 3.0)],
                            s,
                        ),
                        _ => lin(&[(i - 2, 1.0), (i - 1, -8.0), (i + 1, 8.0), (i + 2, -1.0)], s),
                    }
                })
                .collect();
            let d2 = (0..n)
                .map(|i| {
                    let s = 1.0 / (12.0 * h * h);
                    match i {
                        0 => lin(
                            &[(0, 45.0), (1, -154.0), (2, 214.0), (3, -156.0), (4, 61.0), (5, -10.0)],
                            s,
                        ),
                        1 => lin(
                            &[(0, 10.0), (1, -15.0), (2, -4.0), (3, 14.0), (4, -6.0), (5, 1.0)],
                            s,
                        ),
                        _ if i == n - 2 => lin(
                            &[
                                (n - 1, 10.0),
                                (n - 2, -15.0),
                                (n - 3, -4.0),
                                (n - 4, 14.0),
                                (n - 5, -6.0),
                                (n - 6, 1.0),
                            ],
                            s,
                        ),
                        _ if i == n - 1 => lin(
                            &[
                                (n - 1, 45.0),
                                (n - 2, -154.0),
                                (n - 3, 214.0),
                                (n - 4, -156.0),
                                (n - 5, 61.0),
                                (n - 6, -10.0),
                            ],
                            s,
                        ),
                        _ => lin(
                            &[(i - 2, -1.0), (i - 1, 16.0), (i, -30.0), (i + 1, 16.0), (i + 2, -1.0)],
                            s,
                        ),
                    }
                })
                .collect();
            (d1, d2)
        }))
    }

    fn locate(&self, t: f64) -> Result<(usize, f64)> {
        let (t0, t1) = (self.t0, self.t1());
        let slack = 1e-9 * (t1 - t0).abs().max(self.h);
        if !(t >= t0 - slack && t <= t1 + slack) {
            return Err(Error::OutOfRange { t, t0, t1 });
        }
        let last = self.samples.len() - 2;
        let u = ((t - t0) / self.h).clamp(0.0, (last + 1) as f64);
        let i = (u.floor() as usize).min(last);
        Ok((i, u - i as f64))
    }

    /// Derivative of the given order (0..=3) of the interpolant at `t`.
    pub fn derivative_at(&self, t: f64, order: usize) -> Result<DMatrix<f64>> {
        assert!(order <= 3, "interpolant derivatives up to order 3");
        let (d1, d2) = self.node_derivatives()?;
        let (i, s) = self.locate(t)?;
        let h = self.h;
        let data = [
            &self.samples[i],
            &(&d1[i] * h),
            &(&d2[i] * (h * h)),
            &(&d2[i + 1] * (h * h)),
            &(&d1[i + 1] * h),
            &self.samples[i + 1],
        ];
        let mut acc = DMatrix::zeros(self.rows, self.cols);
        for (basis, m) in HERMITE.iter().zip(data) {
            let w = poly_derivative_at(basis, s, order);
            if w != 0.0 {
                acc += m * w;
            }
        }
        Ok(acc / h.powi(order as i32))
    }

    pub fn value_at(&self, t: f64) -> Result<DMatrix<f64>> {
        self.derivative_at(t, 0)
    }

    /// Path of node first derivatives, on the same grid.
    pub fn derivative_path(&self) -> Result<MatrixPath> {
        let (d1, _) = self.node_derivatives()?;
        MatrixPath::new(self.t0, self.h, d1.clone())
    }

    /// Maximum over nodes of `f(sample)`.
    pub fn max_over_nodes(&self, f: impl Fn(&DMatrix<f64>) -> f64) -> f64 {
        self.samples.iter().map(f).fold(0.0, f64::max)
    }

    /// CSV with header `t,m11,m12,...` and one row-major row per node.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["t".to_string()];
        for r in 0..self.rows {
            for c in 0..self.cols {
                header.push(format!("m{}{}", r + 1, c + 1));
            }
        }
        w.write_record(&header)?;
        for (i, m) in self.samples.iter().enumerate() {
            let mut row = vec![format!("{:?}", self.time(i))];
            for r in 0..self.rows {
                for c in 0..self.cols {
                    row.push(format!("{:?}", m[(r, c)]));
                }
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a square path written by [`MatrixPath::write_csv`].
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let width = rdr.headers()?.len();
        let n = ((width.saturating_sub(1)) as f64).sqrt().round() as usize;
        if n == 0 || n * n + 1 != width {
            return Err(Error::Invalid(format!("CSV has {width} columns, expected 1 + n²")));
        }
        let mut times = Vec::new();
        let mut samples = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let vals = record
                .iter()
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Invalid(format!("CSV value: {e}")))?;
            times.push(vals[0]);
            samples.push(DMatrix::from_row_slice(n, n, &vals[1..]));
        }
        if times.len() < 2 {
            return Err(Error::GridTooCoarse { points: times.len(), min: 2 });
        }
        let h = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
        for (i, t) in times.iter().enumerate() {
            if (t - (times[0] + i as f64 * h)).abs() > 1e-9 * h.abs().max(1.0) {
                return Err(Error::Invalid("CSV time grid is not uniform".into()));
            }
        }
        Self::new(times[0], h, samples)
    }
}

/// Matrix whose entries are expressions of `t` alone.
#[derive(Clone, Debug, PartialEq)]
pub struct ExprMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Expression>,
}

impl ExprMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<Expression>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}×{cols} matrix",
                entries.len()
            )));
        }
        if let Some(e) = entries.iter().find(|e| e.max_index() > 0) {
            return Err(Error::Invalid(format!("matrix entry '{e}' must depend on t only")));
        }
        Ok(Self { rows, cols, entries })
    }

    /// Parses a row-major table of time expressions.
    pub fn parse<S: AsRef<str>>(rows: &[Vec<S>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if r == 0 || rows.iter().any(|row| row.len() != c) {
            return Err(Error::Dimension("ragged or empty expression matrix".into()));
        }
        let entries = rows
            .iter()
            .flatten()
            .map(|s| parse(s.as_ref(), 0))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Self::new(r, c, entries)
    }

    pub fn from_constant(m: &DMatrix<f64>) -> Self {
        let mut entries = Vec::with_capacity(m.len());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                entries.push(Expression::Const(m[(r, c)]));
            }
        }
        Self { rows: m.nrows(), cols: m.ncols(), entries }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, r: usize, c: usize) -> &Expression {
        &self.entries[r * self.cols + c]
    }

    pub fn entries(&self) -> &[Expression] {
        &self.entries
    }

    /// Row-major table of printed entries.
    pub fn to_strings(&self) -> Vec<Vec<String>> {
        (0..self.rows)
            .map(|r| (0..self.cols).map(|c| self.get(r, c).to_string()).collect())
            .collect()
    }

    pub fn eval_with<S: Scalar>(&self, t: S) -> Result<Vec<S>> {
        Ok(self.entries.iter().map(|e| e.eval_with(t, &[], &[])).collect::<std::result::Result<_, _>>()?)
    }

    pub fn diff_t(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|e| e.diff(crate::expr::Var::T)).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        let mut entries = Vec::with_capacity(self.entries.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                entries.push(self.get(r, c).clone());
            }
        }
        Self { rows: self.cols, cols: self.rows, entries }
    }

    pub fn matmul(&self, other: &ExprMatrix) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension("expression matrix product".into()));
        }
        let mut entries = Vec::with_capacity(self.rows * other.cols);
        for r in 0..self.rows {
            for c in 0..other.cols {
                entries.push(crate::expr::sum(
                    (0..self.cols)
                        .map(|k| crate::expr::product(self.get(r, k).clone(), other.get(k, c).clone())),
                ));
            }
        }
        Ok(Self { rows: self.rows, cols: other.cols, entries })
    }
}

type MatrixFn = dyn Fn(HyperDual) -> Result<Vec<HyperDual>> + Send + Sync;

/// Matrix function given as a closure over a hyper-dual time argument.
#[derive(Clone)]
pub struct FnMatrix {
    rows: usize,
    cols: usize,
    exact: bool,
    f: Arc<MatrixFn>,
    derivative: Option<Arc<FnMatrix>>,
}

impl FnMatrix {
    pub fn new(
        rows: usize,
        cols: usize,
        f: impl Fn(HyperDual) -> Result<Vec<HyperDual>> + Send + Sync + 'static,
    ) -> Self {
        Self { rows, cols, exact: true, f: Arc::new(f), derivative: None }
    }

    /// Attaches the time derivative, needed wherever `Ṗ` must be lifted.
    pub fn with_derivative(mut self, d: FnMatrix) -> Self {
        self.derivative = Some(Arc::new(d));
        self
    }

    /// Marks the closure as built from sampled data.
    pub fn inexact(mut self) -> Self {
        self.exact = false;
        self
    }
}

impl fmt::Debug for FnMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FnMatrix({}×{})", self.rows, self.cols)
    }
}

/// A matrix-valued function of time from any of the supported sources.
#[derive(Clone, Debug)]
pub enum TimeMatrix {
    Exprs(ExprMatrix),
    Path(MatrixPath),
    Func(FnMatrix),
}

fn to_matrix(rows: usize, cols: usize, vals: &[HyperDual], part: fn(&HyperDual) -> f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |r, c| part(&vals[r * cols + c]))
}

impl TimeMatrix {
    pub fn constant(m: &DMatrix<f64>) -> Self {
        TimeMatrix::Exprs(ExprMatrix::from_constant(m))
    }

    pub fn shape(&self) -> (usize, usize) {
        match self {
            TimeMatrix::Exprs(e) => e.shape(),
            TimeMatrix::Path(p) => p.shape(),
            TimeMatrix::Func(f) => (f.rows, f.cols),
        }
    }

    /// False for sampled data, whose derivatives carry discretisation error.
    pub fn is_exact(&self) -> bool {
        match self {
            TimeMatrix::Exprs(_) => true,
            TimeMatrix::Path(_) => false,
            TimeMatrix::Func(f) => f.exact,
        }
    }

    /// Entries (row-major) at a hyper-dual time. Sampled paths are lifted
    /// through the interpolant's first and second derivatives.
    pub fn eval_lifted(&self, t: HyperDual) -> Result<Vec<HyperDual>> {
        match self {
            TimeMatrix::Exprs(e) => e.eval_with(t),
            TimeMatrix::Func(f) => (f.f)(t),
            TimeMatrix::Path(p) => {
                let v = p.derivative_at(t.re, 0)?;
                if t.is_real() {
                    return Ok(row_major(&v).into_iter().map(HyperDual::real).collect());
                }
                let d1 = p.derivative_at(t.re, 1)?;
                let d2 = p.derivative_at(t.re, 2)?;
                let (rows, cols) = p.shape();
                let mut out = Vec::with_capacity(rows * cols);
                for r in 0..rows {
                    for c in 0..cols {
                        out.push(t.chain(v[(r, c)], d1[(r, c)], d2[(r, c)]));
                    }
                }
                Ok(out)
            }
        }
    }

    pub fn value(&self, t: f64) -> Result<DMatrix<f64>> {
        match self {
            TimeMatrix::Path(p) => p.value_at(t),
            _ => {
                let (r, c) = self.shape();
                Ok(to_matrix(r, c, &self.eval_lifted(HyperDual::real(t))?, |h| h.re))
            }
        }
    }

    /// Value, first and second time derivative at `t`.
    pub fn jet(&self, t: f64) -> Result<[DMatrix<f64>; 3]> {
        match self {
            TimeMatrix::Path(p) => {
                Ok([p.derivative_at(t, 0)?, p.derivative_at(t, 1)?, p.derivative_at(t, 2)?])
            }
            _ => {
                let (r, c) = self.shape();
                let vals = self.eval_lifted(HyperDual::new(t, 1.0, 1.0, 0.0))?;
                Ok([
                    to_matrix(r, c, &vals, |h| h.re),
                    to_matrix(r, c, &vals, |h| h.e1),
                    to_matrix(r, c, &vals, |h| h.e12),
                ])
            }
        }
    }

    /// The time derivative as a matrix function of its own, when available.
    /// For a sampled path this differentiates the interpolant.
    pub fn derivative(&self) -> Result<TimeMatrix> {
        match self {
            TimeMatrix::Exprs(e) => Ok(TimeMatrix::Exprs(e.diff_t())),
            TimeMatrix::Path(p) => {
                p.node_derivatives()?;
                let p = Arc::new(p.clone());
                let (rows, cols) = p.shape();
                let f = move |t: HyperDual| {
                    let d1 = p.derivative_at(t.re, 1)?;
                    let d2 = p.derivative_at(t.re, 2)?;
                    let d3 = p.derivative_at(t.re, 3)?;
                    let mut out = Vec::with_capacity(rows * cols);
                    for r in 0..rows {
                        for c in 0..cols {
                            out.push(t.chain(d1[(r, c)], d2[(r, c)], d3[(r, c)]));
                        }
                    }
                    Ok(out)
                };
                Ok(TimeMatrix::Func(FnMatrix::new(rows, cols, f).inexact()))
            }
            TimeMatrix::Func(f) => match &f.derivative {
                Some(d) => Ok(TimeMatrix::Func((**d).clone())),
                None => Err(Error::Invalid("closure-backed matrix has no derivative function".into())),
            },
        }
    }

    /// Samples onto a uniform grid.
    pub fn sample(&self, t0: f64, t1: f64, h: f64) -> Result<MatrixPath> {
        MatrixPath::from_fn(t0, t1, h, |t| self.value(t))
    }
}

/// Row-major product of an `r×k` and a `k×c` matrix of scalars.
pub(crate) fn lifted_mul<S: Scalar>(a: &[S], b: &[S], r: usize, k: usize, c: usize) -> Vec<S> {
    let mut out = vec![S::constant(0.0); r * c];
    for i in 0..r {
        for j in 0..c {
            let mut acc = S::constant(0.0);
            for l in 0..k {
                acc = acc + a[i * k + l] * b[l * c + j];
            }
            out[i * c + j] = acc;
        }
    }
    out
}

pub(crate) fn lifted_transpose<S: Scalar>(a: &[S], r: usize, c: usize) -> Vec<S> {
    (0..c * r).map(|idx| a[(idx % r) * c + idx / r]).collect()
}

pub(crate) fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.len());
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            out.push(m[(r, c)]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;

    fn rot(t: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[t.cos(), -t.sin(), t.sin(), t.cos()])
    }

    #[test]
    fn interpolant_is_accurate_between_nodes() {
        let p = MatrixPath::from_fn(0.0, 1.0, 1e-2, |t| Ok(rot(t))).unwrap();
        for t in [0.0f64, 0.0037, 0.5, 0.77777, 1.0] {
            let exact_d1 = DMatrix::from_row_slice(2, 2, &[-t.sin(), -t.cos(), t.cos(), -t.sin()]);
            assert!(max_abs(&(p.value_at(t).unwrap() - rot(t))) < 1e-11);
            assert!(max_abs(&(p.derivative_at(t, 1).unwrap() - exact_d1)) < 1e-8);
            assert!(max_abs(&(p.derivative_at(t, 2).unwrap() + rot(t))) < 1e-6);
        }
    }

    #[test]
    fn node_stencils_are_fourth_order() {
        // Quartic polynomials are differentiated exactly by every stencil.
        let f = |t: f64| t.powi(4) - 2.0 * t.powi(3) + t;
        let p =
            MatrixPath::from_fn(0.0, 1.0, 0.1, |t| Ok(DMatrix::from_element(1, 1, f(t)))).unwrap();
        let (d1, d2) = p.node_derivatives().unwrap();
        for (i, t) in p.times().enumerate() {
            let e1 = 4.0 * t.powi(3) - 6.0 * t * t + 1.0;
            let e2 = 12.0 * t * t - 12.0 * t;
            assert!((d1[i][(0, 0)] - e1).abs() < 1e-11, "d1 at node {i}");
            assert!((d2[i][(0, 0)] - e2).abs() < 1e-9, "d2 at node {i}");
        }
    }

    #[test]
    fn out_of_window_and_coarse_grids_are_rejected() {
        let p = MatrixPath::from_fn(0.0, 1.0, 0.1, |t| Ok(rot(t))).unwrap();
        assert!(matches!(p.value_at(1.5), Err(Error::OutOfRange { .. })));
        let coarse = MatrixPath::from_fn(0.0, 1.0, 0.25, |t| Ok(rot(t))).unwrap();
        assert!(matches!(coarse.value_at(0.3), Err(Error::GridTooCoarse { .. })));
        assert!(matches!(MatrixPath::new(0.0, -1.0, vec![rot(0.0); 3]), Err(Error::BadStep(_))));
    }

    #[test]
    fn csv_round_trip() {
        let p = MatrixPath::from_fn(0.0, 0.5, 0.1, |t| Ok(rot(t))).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,m11,m12,m21,m22\n"));
        let q = MatrixPath::read_csv(buf.as_slice()).unwrap();
        assert_eq!(q.len(), p.len());
        for (a, b) in p.samples().iter().zip(q.samples()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn expression_jet_is_exact() {
        let m = ExprMatrix::parse(&[vec!["cos(t)", "t^3"], vec!["1", "exp(2*t)"]]).unwrap();
        let [v, d1, d2] = TimeMatrix::Exprs(m).jet(0.5).unwrap();
        assert_eq!(v[(0, 1)], 0.125);
        assert!((d1[(0, 1)] - 0.75).abs() < 1e-15);
        assert!((d2[(0, 1)] - 3.0).abs() < 1e-15);
        assert!((d2[(1, 1)] - 4.0 * 1f64.exp()).abs() < 1e-14);
        assert_eq!(d1[(1, 0)], 0.0);
    }

    #[test]
    fn path_derivative_differentiates_the_interpolant() {
        let p = MatrixPath::from_fn(0.0, 1.0, 1e-2, |t| Ok(rot(t))).unwrap();
        let d = TimeMatrix::Path(p.clone()).derivative().unwrap();
        assert!(!d.is_exact());
        let [v, dv, _] = d.jet(0.4321).unwrap();
        assert!(max_abs(&(v - p.derivative_at(0.4321, 1).unwrap())) < 1e-15);
        assert!(max_abs(&(dv - p.derivative_at(0.4321, 2).unwrap())) < 1e-15);
    }

    #[test]
    fn lifted_helpers_match_nalgebra() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let b = DMatrix::from_row_slice(3, 2, &[1.0, -1.0, 0.5, 2.0, 0.0, 3.0]);
        let prod = lifted_mul(&row_major(&a), &row_major(&b), 2, 3, 2);
        assert_eq!(prod, row_major(&(&a * &b)));
        assert_eq!(lifted_transpose(&row_major(&a), 2, 3), row_major(&a.transpose()));
    }

    #[test]
    fn expression_matrix_rejects_space_variables() {
        assert!(ExprMatrix::new(1, 1, vec![parse("x1", 1).unwrap()]).is_err());
    }
}
