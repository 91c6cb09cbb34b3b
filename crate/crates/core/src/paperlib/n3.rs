//! Three-dimensional family with a double multiplier eigenvalue.
//!
//! Given `a(t)` and constants `c₁ > a²`, `c₂`, put `b = √(c₁ − a²)`,
//! `ã = −ḃ`, `b̃ = ȧ` and
//!
//! ```text
//! g = [[c₂ − b², ab, −b], [ab, c₂ − a², a], [−b, a, c₂ − 1]]
//! ```
//!
//! which has eigenvalue `c₂` on the plane orthogonal to `(b, −a, 1)` and
//! `c₂ − c₁ − 1` along it. The connection is `Γ¹₂ = f(t, u, v)` with
//! `u = x₁ − bx₃`, `v = x₂ + ax₃`, and the vector potential is the
//! particular solution
//!
//! ```text
//! A₁ = 2vI + ãx₃,  A₂ = −2uI + b̃x₃,  A₃ = −2(au + bv)I − ãx₁ − b̃x₂
//! ```
//!
//! with `I = ∫₀¹ s f(t, su, sv) ds`.
//!
//! For a scalar potential `U(t, u, v) + Z(t, z)` with `z = x₃ + bx₁ − ax₂`,
//! the multiplier condition on the potential holds only while `a` is
//! constant. [`PotentialMode::Corrected`] adds the quadratic term
//! `½|Ṗy|² + A·(Ṗy) − ½yᵀĊy` (with `y = (u, v, z)`, `x = Py` and `C` the
//! symmetrised coupling between the `(u, v)` plane and `z` in
//! `PᵀṖ + PᵀΓ₀P`) that restores it for every `a(t)`.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::decouple::BlockStructure;
use crate::error::{Error, Result};
use crate::expr::{s_add, s_mul, s_neg, s_sub, Expression, Func, HyperDual, Scalar, Var};
use crate::helmholtz::MultiplierCandidate;
use crate::model::{EmSystem, FnPotentials};
use crate::path::{lifted_mul, ExprMatrix, TimeMatrix};
use crate::quadrature::integrate_unit;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialMode {
    /// `V = U + Z` only; admissible for constant `a`.
    Plain,
    /// `V = U + Z` plus the correction for time-dependent `a`.
    #[default]
    Corrected,
}

#[derive(Clone, Debug, PartialEq)]
pub struct N3Family {
    pub a: Expression,
    pub c1: f64,
    pub c2: f64,
    /// `f(t, u, v)` written over `t, x1 = u, x2 = v`.
    pub f: Expression,
    /// `U(t, u, v)` written over `t, x1 = u, x2 = v`.
    pub u_pot: Expression,
    /// `Z(t, z)` written over `t, x1 = z`.
    pub z_pot: Expression,
    pub mode: PotentialMode,
}

fn c(v: f64) -> Expression {
    Expression::Const(v)
}

fn check_vars(e: &Expression, max: usize, name: &str) -> Result<()> {
    if e.max_index() > max || e.mentions_velocity() {
        return Err(Error::Invalid(format!("{name} may only use t and x1..x{max}")));
    }
    Ok(())
}

/// `a, b, ã, b̃` and the transforms as expressions of `t`.
#[derive(Clone, Debug)]
struct Coefficients {
    a: Expression,
    b: Expression,
    a_t: Expression,
    b_t: Expression,
    q: ExprMatrix,
    p: ExprMatrix,
    p_dot: ExprMatrix,
    c_dot: ExprMatrix,
}

fn mat(entries: Vec<Expression>) -> ExprMatrix {
    ExprMatrix::new(3, 3, entries).expect("3×3")
}

fn add(x: &ExprMatrix, y: &ExprMatrix) -> ExprMatrix {
    mat(x.entries().iter().zip(y.entries()).map(|(p, q)| s_add(p.clone(), q.clone())).collect())
}

impl Coefficients {
    fn new(fam: &N3Family) -> Result<Self> {
        let a = fam.a.clone();
        let b = Expression::unary(Func::Sqrt, s_sub(c(fam.c1), Expression::powi(a.clone(), 2)));
        let b_t = a.diff(Var::T);
        let a_t = s_neg(b.diff(Var::T));
        let q = mat(vec![
            c(1.0), c(0.0), s_neg(b.clone()),
            c(0.0), c(1.0), a.clone(),
            b.clone(), s_neg(a.clone()), c(1.0),
        ]);
        // k = a² + b² + 1 = c₁ + 1
        let inv_k = c(1.0 / (fam.c1 + 1.0));
        let scaled = |e: Expression| s_mul(inv_k.clone(), e);
        let ab = s_mul(a.clone(), b.clone());
        let p = mat(vec![
            scaled(s_add(Expression::powi(a.clone(), 2), c(1.0))),
            scaled(ab.clone()),
            scaled(b.clone()),
            scaled(ab),
            scaled(s_add(Expression::powi(b.clone(), 2), c(1.0))),
            scaled(s_neg(a.clone())),
            scaled(s_neg(b.clone())),
            scaled(a.clone()),
            inv_k.clone(),
        ]);
        let p_dot = p.diff_t();
        let gamma0 = mat(vec![
            c(0.0), c(0.0), a_t.clone(),
            c(0.0), c(0.0), b_t.clone(),
            s_neg(a_t.clone()), s_neg(b_t.clone()), c(0.0),
        ]);
        let pt = p.transpose();
        let n = add(&pt.matmul(&p_dot)?, &pt.matmul(&gamma0)?.matmul(&p)?);
        let mut cm = vec![c(0.0); 9];
        for i in 0..2 {
            cm[i * 3 + 2] = n.get(i, 2).clone();
            cm[2 * 3 + i] = n.get(i, 2).clone();
        }
        let c_dot = mat(cm).diff_t();
        Ok(Self { a, b, a_t, b_t, q, p, p_dot, c_dot })
    }

    fn lifted(&self, t: HyperDual) -> Result<[HyperDual; 4]> {
        let ev = |e: &Expression| -> Result<HyperDual> { Ok(e.eval_with(t, &[], &[])?) };
        Ok([ev(&self.a)?, ev(&self.b)?, ev(&self.a_t)?, ev(&self.b_t)?])
    }
}

impl N3Family {
    pub fn new(a: Expression, c1: f64, c2: f64, f: Expression, u_pot: Expression, z_pot: Expression) -> Result<Self> {
        check_vars(&a, 0, "a")?;
        check_vars(&f, 2, "f")?;
        check_vars(&u_pot, 2, "U")?;
        check_vars(&z_pot, 1, "Z")?;
        if !c1.is_finite() || c1 <= 0.0 || !c2.is_finite() {
            return Err(Error::Invalid("c1 must be positive and c2 finite".into()));
        }
        Ok(Self { a, c1, c2, f, u_pot, z_pot, mode: PotentialMode::Corrected })
    }

    pub fn with_mode(mut self, mode: PotentialMode) -> Self {
        self.mode = mode;
        self
    }

    /// `(c₂, c₂ − c₁ − 1)`: the double and the single eigenvalue.
    pub fn eigenvalues(&self) -> (f64, f64) {
        (self.c2, self.c2 - self.c1 - 1.0)
    }

    /// Checks `c₁ > a(t)²` on a grid over the window.
    pub fn check_window(&self, t0: f64, t1: f64) -> Result<()> {
        for i in 0..=200 {
            let t = t0 + (t1 - t0) * i as f64 / 200.0;
            let a = self.a.eval_t(t)?;
            if a * a >= self.c1 {
                return Err(Error::OutOfRange { t, t0, t1 });
            }
        }
        Ok(())
    }

    pub fn build(&self, t0: f64, t1: f64) -> Result<N3Build> {
        self.check_window(t0, t1)?;
        let coeffs = Arc::new(Coefficients::new(self)?);
        let fam = Arc::new(self.clone());

        let vector = {
            let (fam, coeffs) = (fam.clone(), coeffs.clone());
            move |t: HyperDual, x: &[HyperDual]| vector_potential(&fam, &coeffs, t, x)
        };
        let scalar = {
            let (fam, coeffs) = (fam.clone(), coeffs.clone());
            move |t: HyperDual, x: &[HyperDual]| scalar_potential(&fam, &coeffs, t, x)
        };
        let system = EmSystem::new(Arc::new(FnPotentials::new(3, "n3 family", scalar, vector)));

        let (a, b) = (&coeffs.a, &coeffs.b);
        let c2 = c(self.c2);
        let g = mat(vec![
            s_sub(c2.clone(), Expression::powi(b.clone(), 2)),
            s_mul(a.clone(), b.clone()),
            s_neg(b.clone()),
            s_mul(a.clone(), b.clone()),
            s_sub(c2.clone(), Expression::powi(a.clone(), 2)),
            a.clone(),
            s_neg(b.clone()),
            a.clone(),
            c(self.c2 - 1.0),
        ]);
        let (lambda, mu) = self.eigenvalues();
        let mut warnings = Vec::new();
        if lambda.abs() <= 1e-8 || mu.abs() <= 1e-8 {
            warnings.push("the multiplier is singular".into());
        }
        Ok(N3Build {
            system,
            multiplier: MultiplierCandidate::from_exprs(g),
            transform: TimeMatrix::Exprs(coeffs.p.clone()),
            inverse_transform: TimeMatrix::Exprs(coeffs.q.clone()),
            blocks: BlockStructure::from_sizes(&[2, 1], &[lambda, mu]),
            family: self.clone(),
            coeffs,
            warnings,
        })
    }
}

fn vector_potential(fam: &N3Family, co: &Coefficients, t: HyperDual, x: &[HyperDual]) -> Result<Vec<HyperDual>> {
    let [a, b, a_t, b_t] = co.lifted(t)?;
    let u = x[0] - b * x[2];
    let v = x[1] + a * x[2];
    let zeros = [HyperDual::real(0.0); 2];
    let i: HyperDual = integrate_unit::<HyperDual, Error>(|s| {
        let val = fam.f.eval_with(t, &[u.scale(s), v.scale(s)], &zeros)?;
        Ok(val.scale(s))
    })?;
    let two_i = i.scale(2.0);
    Ok(vec![
        v * two_i + a_t * x[2],
        -(u * two_i) + b_t * x[2],
        -((a * u + b * v) * two_i) - a_t * x[0] - b_t * x[1],
    ])
}

fn scalar_potential(fam: &N3Family, co: &Coefficients, t: HyperDual, x: &[HyperDual]) -> Result<HyperDual> {
    let [a, b, _, _] = co.lifted(t)?;
    let u = x[0] - b * x[2];
    let v = x[1] + a * x[2];
    let z = x[2] + b * x[0] - a * x[1];
    let zeros = [HyperDual::real(0.0); 2];
    let mut val = fam.u_pot.eval_with(t, &[u, v], &zeros)? + fam.z_pot.eval_with(t, &[z], &zeros[..1])?;
    if fam.mode == PotentialMode::Corrected {
        let y = [u, v, z];
        let w = lifted_mul(&co.p_dot.eval_with(t)?, &y, 3, 3, 1);
        let av = vector_potential(fam, co, t, x)?;
        let cy = lifted_mul(&co.c_dot.eval_with(t)?, &y, 3, 3, 1);
        for i in 0..3 {
            val = val + (w[i] * w[i]).scale(0.5) + av[i] * w[i] - (y[i] * cy[i]).scale(0.5);
        }
    }
    Ok(val)
}

#[derive(Clone, Debug)]
pub struct N3Build {
    pub system: EmSystem,
    pub multiplier: MultiplierCandidate,
    /// `x = P(t) y` with `y = (u, v, z)`.
    pub transform: TimeMatrix,
    /// `y = Q(t) x`.
    pub inverse_transform: TimeMatrix,
    /// `{u, v}` with eigenvalue `c₂`, `{z}` with `c₂ − c₁ − 1`.
    pub blocks: BlockStructure,
    pub family: N3Family,
    coeffs: Arc<Coefficients>,
    pub warnings: Vec<String>,
}

impl N3Build {
    /// `(a, b, ã, b̃)` at `t`.
    pub fn coefficients(&self, t: f64) -> Result<[f64; 4]> {
        Ok(self.coeffs.lifted(HyperDual::real(t))?.map(|h| h.re))
    }

    /// Residuals of the six component equations of `ġ = gΓ − Γg` in the
    /// order `g₁₁, g₂₂, g₃₃, g₁₂, g₂₃, g₁₃`, each written in terms of
    /// `a, b, ã, b̃`.
    pub fn gdot_residuals(&self, t: f64) -> Result<[f64; 6]> {
        let [a, b, at, bt] = self.coefficients(t)?;
        let g_dot = match &self.multiplier.matrix {
            TimeMatrix::Exprs(e) => TimeMatrix::Exprs(e.diff_t()).value(t)?,
            other => other.jet(t)?[1].clone(),
        };
        let rhs = [
            2.0 * at * b,
            -2.0 * bt * a,
            2.0 * (bt * a - at * b),
            b * bt - a * at,
            bt * (1.0 - a * a) + at * a * b,
            at * (1.0 - b * b) + bt * a * b,
        ];
        let lhs = [g_dot[(0, 0)], g_dot[(1, 1)], g_dot[(2, 2)], g_dot[(0, 1)], g_dot[(1, 2)], g_dot[(0, 2)]];
        Ok(std::array::from_fn(|i| (lhs[i] - rhs[i]).abs()))
    }

    /// `∂A₁/∂x₂ − ∂A₂/∂x₁ − 2f`, `∂A₁/∂x₃ − ∂A₃/∂x₁ − 2af − 2ã` and
    /// `∂A₂/∂x₃ − ∂A₃/∂x₂ − 2bf − 2b̃`, in absolute value.
    pub fn curl_residuals(&self, t: f64, x: &[f64]) -> Result<[f64; 3]> {
        let [a, b, at, bt] = self.coefficients(t)?;
        let da = self.system.first_jet(t, x)?.da;
        let (u, v) = (x[0] - b * x[2], x[1] + a * x[2]);
        let f = self.family.f.eval_with(t, &[u, v], &[0.0, 0.0])?;
        Ok([
            (da[(0, 1)] - da[(1, 0)] - 2.0 * f).abs(),
            (da[(0, 2)] - da[(2, 0)] - 2.0 * a * f - 2.0 * at).abs(),
            (da[(1, 2)] - da[(2, 1)] - 2.0 * b * f - 2.0 * bt).abs(),
        ])
    }

    /// `∂Γ¹₂/∂x₃ − a ∂Γ¹₂/∂x₂ + b ∂Γ¹₂/∂x₁`.
    pub fn curvature_pde_residual(&self, t: f64, x: &[f64]) -> Result<f64> {
        let [a, b, _, _] = self.coefficients(t)?;
        let dg = self.system.connection_gradient(t, x)?;
        Ok((dg[2][(0, 1)] - a * dg[1][(0, 1)] + b * dg[0][(0, 1)]).abs())
    }

    /// `max |Q(t) P(t) − I|`.
    pub fn transform_defect(&self, t: f64) -> Result<f64> {
        let qp = self.inverse_transform.value(t)? * self.transform.value(t)?;
        Ok((qp - DMatrix::identity(3, 3)).amax())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn family(a: &str, f: &str) -> N3Family {
        N3Family::new(
            parse(a, 1).unwrap(),
            1.0,
            3.0,
            parse(f, 2).unwrap(),
            parse("sin(t)*x1^2*x2 + t*x1", 2).unwrap(),
            parse("cos(t)*x1^3", 1).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn constant_a_gives_constant_transform() {
        let b = family("0", "0").build(0.0, 1.0).unwrap();
        let p = b.inverse_transform.value(0.7).unwrap();
        let want = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, -1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
        assert!((p - want).amax() < 1e-15);
        let a = b.system.vector_potential(0.3, &[0.2, 0.4, -0.1]).unwrap();
        assert!(a.amax() < 1e-15);
    }

    #[test]
    fn unit_f_potential_has_closed_form() {
        let b = family("0.5*sin(t)", "1").build(0.0, 1.0).unwrap();
        let (t, x) = (0.4, [0.3, -0.2, 0.5]);
        let [a, bb, at, bt] = b.coefficients(t).unwrap();
        let (u, v) = (x[0] - bb * x[2], x[1] + a * x[2]);
        let got = b.system.vector_potential(t, &x).unwrap();
        let want = [v + at * x[2], -u + bt * x[2], -(a * u + bb * v) - at * x[0] - bt * x[1]];
        for i in 0..3 {
            assert!((got[i] - want[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn structure_identities_hold() {
        let b = family("0.5*sin(t)", "x1*x2 + sin(t)*x1").build(0.0, 1.0).unwrap();
        for (t, x) in [(0.3, [0.2, -0.4, 0.7]), (0.8, [-0.5, 0.1, 0.3])] {
            assert!(b.gdot_residuals(t).unwrap().iter().all(|r| *r < 1e-12));
            assert!(b.curl_residuals(t, &x).unwrap().iter().all(|r| *r < 1e-10));
            assert!(b.curvature_pde_residual(t, &x).unwrap() < 1e-10);
            assert!(b.transform_defect(t).unwrap() < 1e-14);
        }
    }

    #[test]
    fn rejects_window_where_b_is_imaginary() {
        let f = family("2*t", "0");
        assert!(matches!(f.check_window(0.0, 1.0), Err(Error::OutOfRange { .. })));
    }
}
