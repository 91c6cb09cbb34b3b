//! Second-order systems of electromagnetic type.
//!
//! A system is determined by a scalar potential `V(t, x)` and a vector
//! potential `A(t, x)`; the forces are
//! `Fᵃ = (∂Aᵇ/∂xᵃ − ∂Aᵃ/∂xᵇ) ẋᵇ − ∂V/∂xᵃ − ∂Aᵃ/∂t`.
//! Everything else (connection, Jacobi endomorphism, curvature) follows
//! from first and second partials of the potentials, which are obtained
//! exactly with hyper-dual arithmetic.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::expr::{parse, EvalPoint, Expression, HyperDual, Var};
use crate::linalg::rk4_vector;
use crate::sampling::{sample_cloud, CloudSpec};

/// Source of the potentials, evaluated at hyper-dual arguments so that
/// derivatives can be seeded along any pair of variables.
pub trait Potentials: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    fn scalar(&self, t: HyperDual, x: &[HyperDual]) -> Result<HyperDual>;

    fn vector(&self, t: HyperDual, x: &[HyperDual]) -> Result<Vec<HyperDual>>;

    /// Closed-form expressions `(V, A)` when the potentials have them.
    fn expressions(&self) -> Option<(Expression, Vec<Expression>)> {
        None
    }

    /// False when the potentials involve sampled paths.
    fn is_exact(&self) -> bool {
        true
    }
}

/// Potentials given as expressions over `t, x1..xn`.
#[derive(Clone, Debug)]
pub struct ExprPotentials {
    n: usize,
    v: Expression,
    a: Vec<Expression>,
}

impl Potentials for ExprPotentials {
    fn dim(&self) -> usize {
        self.n
    }

    fn scalar(&self, t: HyperDual, x: &[HyperDual]) -> Result<HyperDual> {
        let zeros = vec![HyperDual::real(0.0); self.n];
        Ok(self.v.eval_with(t, x, &zeros)?)
    }

    fn vector(&self, t: HyperDual, x: &[HyperDual]) -> Result<Vec<HyperDual>> {
        let zeros = vec![HyperDual::real(0.0); self.n];
        self.a.iter().map(|e| Ok(e.eval_with(t, x, &zeros)?)).collect()
    }

    fn expressions(&self) -> Option<(Expression, Vec<Expression>)> {
        Some((self.v.clone(), self.a.clone()))
    }
}

type ScalarFn = dyn Fn(HyperDual, &[HyperDual]) -> Result<HyperDual> + Send + Sync;
type VectorFn = dyn Fn(HyperDual, &[HyperDual]) -> Result<Vec<HyperDual>> + Send + Sync;

/// Potentials given as closures.
#[derive(Clone)]
pub struct FnPotentials {
    n: usize,
    label: String,
    exact: bool,
    v: Arc<ScalarFn>,
    a: Arc<VectorFn>,
    exprs: Option<(Expression, Vec<Expression>)>,
}

impl FnPotentials {
    pub fn new(
        n: usize,
        label: impl Into<String>,
        v: impl Fn(HyperDual, &[HyperDual]) -> Result<HyperDual> + Send + Sync + 'static,
        a: impl Fn(HyperDual, &[HyperDual]) -> Result<Vec<HyperDual>> + Send + Sync + 'static,
    ) -> Self {
        Self { n, label: label.into(), exact: true, v: Arc::new(v), a: Arc::new(a), exprs: None }
    }

    /// Marks the potentials as carrying discretisation error.
    pub fn inexact(mut self) -> Self {
        self.exact = false;
        self
    }

    /// Attaches equivalent closed-form expressions for export.
    pub fn with_expressions(mut self, v: Expression, a: Vec<Expression>) -> Self {
        self.exprs = Some((v, a));
        self
    }
}

impl fmt::Debug for FnPotentials {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FnPotentials({}, n = {})", self.label, self.n)
    }
}

impl Potentials for FnPotentials {
    fn dim(&self) -> usize {
        self.n
    }

    fn scalar(&self, t: HyperDual, x: &[HyperDual]) -> Result<HyperDual> {
        (self.v)(t, x)
    }

    fn vector(&self, t: HyperDual, x: &[HyperDual]) -> Result<Vec<HyperDual>> {
        let a = (self.a)(t, x)?;
        if a.len() != self.n {
            return Err(Error::Dimension(format!("vector potential has {} components", a.len())));
        }
        Ok(a)
    }

    fn expressions(&self) -> Option<(Expression, Vec<Expression>)> {
        self.exprs.clone()
    }

    fn is_exact(&self) -> bool {
        self.exact
    }
}

/// First partials of the potentials at a point.
#[derive(Clone, Debug)]
pub struct FirstJet {
    /// `∂V/∂xᵃ`
    pub dv: DVector<f64>,
    /// `[(a, b)] = ∂Aᵃ/∂xᵇ`
    pub da: DMatrix<f64>,
    /// `∂Aᵃ/∂t`
    pub dta: DVector<f64>,
}

/// First and second partials of the potentials at a point.
#[derive(Clone, Debug)]
pub struct PotentialJet {
    pub first: FirstJet,
    pub hess_v: DMatrix<f64>,
    /// `d2a[a][(b, c)] = ∂²Aᵃ/∂xᵇ∂xᶜ`
    pub d2a: Vec<DMatrix<f64>>,
    /// `[(a, c)] = ∂²Aᵃ/∂t∂xᶜ`
    pub dtda: DMatrix<f64>,
}

/// `R[a][(b, c)] = Rᵃ_bc`
#[derive(Clone, Debug, PartialEq)]
pub struct Curvature(pub Vec<DMatrix<f64>>);

impl Curvature {
    pub fn get(&self, a: usize, b: usize, c: usize) -> f64 {
        self.0[a][(b, c)]
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// An electromagnetic-type system `ẍ = F(t, x, ẋ)`.
#[derive(Clone, Debug)]
pub struct EmSystem {
    n: usize,
    potentials: Arc<dyn Potentials>,
}

const VELOCITY_TOL: f64 = 1e-12;

impl EmSystem {
    pub fn new(potentials: Arc<dyn Potentials>) -> Self {
        Self { n: potentials.dim(), potentials }
    }

    /// Builds a system from expressions, rejecting potentials that depend
    /// on the velocities at any point of the default sample cloud.
    pub fn from_expressions(n: usize, v: Expression, a: Vec<Expression>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Invalid("dimension must be at least 1".into()));
        }
        if a.len() != n {
            return Err(Error::Dimension(format!("{} vector potential components for n = {n}", a.len())));
        }
        if let Some(e) = std::iter::once(&v).chain(&a).find(|e| e.max_index() > n) {
            return Err(Error::Dimension(format!("'{e}' refers to an index above {n}")));
        }
        let cloud = sample_cloud(n, &CloudSpec::default());
        for (name, e) in std::iter::once(("V".to_string(), &v))
            .chain(a.iter().enumerate().map(|(i, e)| (format!("A{}", i + 1), e)))
        {
            if !e.mentions_velocity() {
                continue;
            }
            for p in &cloud {
                for i in 0..n {
                    if e.deriv(p, &[Var::XDot(i)])?.abs() > VELOCITY_TOL {
                        return Err(Error::VelocityDependent(name));
                    }
                }
            }
        }
        Ok(Self::new(Arc::new(ExprPotentials { n, v, a })))
    }

    /// Parses `V` and the components of `A`.
    pub fn parse(n: usize, v: &str, a: &[impl AsRef<str>]) -> Result<Self> {
        let v = parse(v, n)?;
        let a = a.iter().map(|s| parse(s.as_ref(), n)).collect::<std::result::Result<_, _>>()?;
        Self::from_expressions(n, v, a)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn potentials(&self) -> &Arc<dyn Potentials> {
        &self.potentials
    }

    pub fn is_exact(&self) -> bool {
        self.potentials.is_exact()
    }

    pub fn expressions(&self) -> Option<(Expression, Vec<Expression>)> {
        self.potentials.expressions()
    }

    fn check_point(&self, t: f64, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::Dimension(format!("point of dimension {} for n = {}", x.len(), self.n)));
        }
        if !t.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("evaluation point has non-finite entries".into()));
        }
        Ok(())
    }

    /// Evaluates the potentials with variable `i` seeded along `e1` and `j`
    /// along `e2`, where variable 0 is `t` and `k ≥ 1` is `x_k`.
    fn seeded_eval(
        &self,
        t: f64,
        x: &[f64],
        i: Option<usize>,
        j: Option<usize>,
    ) -> Result<(HyperDual, Vec<HyperDual>)> {
        let var = |k: usize, re: f64| HyperDual::seeded(re, i == Some(k), j == Some(k));
        let ht = var(0, t);
        let hx: Vec<HyperDual> = x.iter().enumerate().map(|(k, &v)| var(k + 1, v)).collect();
        Ok((self.potentials.scalar(ht, &hx)?, self.potentials.vector(ht, &hx)?))
    }

    pub fn first_jet(&self, t: f64, x: &[f64]) -> Result<FirstJet> {
        self.check_point(t, x)?;
        let n = self.n;
        let mut jet =
            FirstJet { dv: DVector::zeros(n), da: DMatrix::zeros(n, n), dta: DVector::zeros(n) };
        let mut store = |k: usize, dv: f64, da: &mut dyn Iterator<Item = f64>| {
            if k == 0 {
                for (a, d) in da.enumerate() {
                    jet.dta[a] = d;
                }
            } else {
                jet.dv[k - 1] = dv;
                for (a, d) in da.enumerate() {
                    jet.da[(a, k - 1)] = d;
                }
            }
        };
        // Two variables per evaluation, one on each infinitesimal direction.
        let mut k = 0;
        while k <= n {
            let second = (k < n).then_some(k + 1);
            let (v, a) = self.seeded_eval(t, x, Some(k), second)?;
            store(k, v.e1, &mut a.iter().map(|h| h.e1));
            if let Some(k2) = second {
                store(k2, v.e2, &mut a.iter().map(|h| h.e2));
            }
            k += 2;
        }
        Ok(jet)
    }

    /// All partials of order one and two except `∂²/∂t²`.
    pub fn jet(&self, t: f64, x: &[f64]) -> Result<PotentialJet> {
        self.check_point(t, x)?;
        let n = self.n;
        let mut first =
            FirstJet { dv: DVector::zeros(n), da: DMatrix::zeros(n, n), dta: DVector::zeros(n) };
        let mut hess_v = DMatrix::zeros(n, n);
        let mut d2a = vec![DMatrix::zeros(n, n); n];
        let mut dtda = DMatrix::zeros(n, n);
        for i in 0..=n {
            for j in i.max(1)..=n {
                let (v, a) = self.seeded_eval(t, x, Some(i), Some(j))?;
                let c = j - 1;
                if i == 0 {
                    for (ai, h) in a.iter().enumerate() {
                        first.dta[ai] = h.e1;
                        dtda[(ai, c)] = h.e12;
                    }
                } else {
                    let b = i - 1;
                    hess_v[(b, c)] = v.e12;
                    hess_v[(c, b)] = v.e12;
                    for (ai, h) in a.iter().enumerate() {
                        d2a[ai][(b, c)] = h.e12;
                        d2a[ai][(c, b)] = h.e12;
                    }
                    if i == j {
                        first.dv[b] = v.e1;
                        for (ai, h) in a.iter().enumerate() {
                            first.da[(ai, b)] = h.e1;
                        }
                    }
                }
            }
        }
        Ok(PotentialJet { first, hess_v, d2a, dtda })
    }

    pub fn scalar_potential(&self, t: f64, x: &[f64]) -> Result<f64> {
        self.check_point(t, x)?;
        Ok(self.seeded_eval(t, x, None, None)?.0.re)
    }

    pub fn vector_potential(&self, t: f64, x: &[f64]) -> Result<DVector<f64>> {
        self.check_point(t, x)?;
        let a = self.seeded_eval(t, x, None, None)?.1;
        Ok(DVector::from_iterator(self.n, a.iter().map(|h| h.re)))
    }

    pub fn forces(&self, p: &EvalPoint) -> Result<DVector<f64>> {
        self.check_velocity(p)?;
        let jet = self.first_jet(p.t, &p.x)?;
        Ok(forces_from(&jet, &p.xdot))
    }

    fn check_velocity(&self, p: &EvalPoint) -> Result<()> {
        if p.xdot.len() != self.n {
            return Err(Error::Dimension(format!(
                "velocity of dimension {} for n = {}",
                p.xdot.len(),
                self.n
            )));
        }
        Ok(())
    }

    /// `Γᵃ_b = ½(∂Aᵃ/∂xᵇ − ∂Aᵇ/∂xᵃ)`; independent of the velocities.
    pub fn connection(&self, t: f64, x: &[f64]) -> Result<DMatrix<f64>> {
        Ok(connection_from(&self.first_jet(t, x)?))
    }

    /// `∂Γ/∂xʳ` for each `r`.
    pub fn connection_gradient(&self, t: f64, x: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        Ok(connection_gradient_from(&self.jet(t, x)?))
    }

    /// `∂Γ/∂t`
    pub fn connection_time_derivative(&self, t: f64, x: &[f64]) -> Result<DMatrix<f64>> {
        let jet = self.jet(t, x)?;
        Ok((&jet.dtda - jet.dtda.transpose()) * 0.5)
    }

    /// Jacobi endomorphism `Φᵃ_c`, assembled term by term from the second
    /// partials of the potentials.
    pub fn jacobi(&self, p: &EvalPoint) -> Result<DMatrix<f64>> {
        self.check_velocity(p)?;
        let jet = self.jet(p.t, &p.x)?;
        let n = self.n;
        let gamma = connection_from(&jet.first);
        let gg = &gamma * &gamma;
        Ok(DMatrix::from_fn(n, n, |a, c| {
            let velocity: f64 = (0..n)
                .map(|b| {
                    0.5 * (jet.d2a[a][(c, b)] + jet.d2a[c][(a, b)] - 2.0 * jet.d2a[b][(a, c)])
                        * p.xdot[b]
                })
                .sum();
            velocity - gg[(a, c)]
                + jet.hess_v[(a, c)]
                + 0.5 * (jet.dtda[(a, c)] + jet.dtda[(c, a)])
        }))
    }

    /// `Rᵃ_bc = ∂Γᵃ_b/∂xᶜ − ∂Γᵃ_c/∂xᵇ`
    pub fn curvature(&self, t: f64, x: &[f64]) -> Result<Curvature> {
        let dg = self.connection_gradient(t, x)?;
        Ok(curvature_from(&dg))
    }

    /// Right-hand side `(ẋ, F)` of the first-order form.
    pub fn sode_rhs(&self, p: &EvalPoint) -> Result<DVector<f64>> {
        let f = self.forces(p)?;
        Ok(DVector::from_iterator(2 * self.n, p.xdot.iter().copied().chain(f.iter().copied())))
    }

    /// RK4 from `(t0, x0, v0)` to `t1`; returns `(x, ẋ)` at `t1`.
    pub fn integrate(
        &self,
        t0: f64,
        x0: &[f64],
        v0: &[f64],
        t1: f64,
        h: f64,
    ) -> Result<(DVector<f64>, DVector<f64>)> {
        if h.is_nan() || h <= 0.0 {
            return Err(Error::BadStep(h));
        }
        let n = self.n;
        let steps = crate::linalg::step_count(t0, t1, h);
        let step = (t1 - t0) / steps as f64;
        let y0 = DVector::from_iterator(2 * n, x0.iter().chain(v0).copied());
        let y = rk4_vector(
            |t, y| {
                let p = EvalPoint::new(t, y.rows(0, n).iter().copied().collect(), y.rows(n, n).iter().copied().collect());
                self.sode_rhs(&p)
            },
            t0,
            y0,
            step,
            steps,
        )?;
        Ok((y.rows(0, n).into_owned(), y.rows(n, n).into_owned()))
    }
}

pub(crate) fn forces_from(jet: &FirstJet, xdot: &[f64]) -> DVector<f64> {
    let v = DVector::from_column_slice(xdot);
    (jet.da.transpose() - &jet.da) * v - &jet.dv - &jet.dta
}

pub(crate) fn connection_from(jet: &FirstJet) -> DMatrix<f64> {
    (&jet.da - jet.da.transpose()) * 0.5
}

pub(crate) fn connection_gradient_from(jet: &PotentialJet) -> Vec<DMatrix<f64>> {
    let n = jet.hess_v.nrows();
    (0..n)
        .map(|r| DMatrix::from_fn(n, n, |a, b| 0.5 * (jet.d2a[a][(b, r)] - jet.d2a[b][(a, r)])))
        .collect()
}

pub(crate) fn curvature_from(dg: &[DMatrix<f64>]) -> Curvature {
    let n = dg.len();
    Curvature((0..n).map(|a| DMatrix::from_fn(n, n, |b, c| dg[c][(a, b)] - dg[b][(a, c)])).collect())
}
