//! Systems whose connection depends on time only.
//!
//! With `U̇ + ΓU = 0`, `U(t0) = I`, the coordinates `y = Uᵀx` turn the
//! equations into `ÿ + ∂W/∂y = 0`, and every constant symmetric `S` for
//! which `S·Hess W` is symmetric yields the multiplier `g = U S Uᵀ`.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{product, sum, EvalPoint, Expression, HyperDual, Scalar, Var};
use crate::helmholtz::MultiplierCandidate;
use crate::linalg::{asymmetry, max_abs, rk4_matrix, skewness_defect, step_count};
use crate::model::{EmSystem, FnPotentials};
use crate::path::{lifted_mul, lifted_transpose, ExprMatrix, FnMatrix, MatrixPath, TimeMatrix};

const SKEW_TOL: f64 = 1e-10;

/// Solves `U̇ = −Γ(t)U`, `U(t0) = I` with RK4.
pub fn solve_u(
    gamma: impl Fn(f64) -> Result<DMatrix<f64>>,
    n: usize,
    t0: f64,
    t1: f64,
    h: f64,
) -> Result<MatrixPath> {
    if !h.is_finite() || h <= 0.0 {
        return Err(Error::BadStep(h));
    }
    let steps = step_count(t0, t1, h);
    let step = (t1 - t0) / steps as f64;
    let samples = rk4_matrix(
        |t, u| {
            let g = gamma(t)?;
            if g.shape() != (n, n) {
                return Err(Error::Dimension("connection has the wrong shape".into()));
            }
            let defect = skewness_defect(&g);
            if defect > SKEW_TOL * (1.0 + max_abs(&g)) {
                return Err(Error::NotSkew { what: "connection", t, defect });
            }
            Ok(-(g * u))
        },
        t0,
        DMatrix::identity(n, n),
        step,
        steps,
    )?;
    MatrixPath::new(t0, step, samples)
}

/// `max ‖S·Hess W − (S·Hess W)ᵀ‖` over points read as `(t, y)`.
pub fn check_weqn(w: &Expression, s: &DMatrix<f64>, points: &[EvalPoint]) -> Result<f64> {
    let n = s.nrows();
    let mut worst = 0.0f64;
    for p in points {
        let mut hess = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = w.deriv(p, &[Var::X(i), Var::X(j)])?;
                hess[(i, j)] = v;
                hess[(j, i)] = v;
            }
        }
        worst = worst.max(asymmetry(&(s * hess)));
    }
    Ok(worst)
}

/// `U S Uᵀ` node by node.
pub fn multiplier_from_s(u: &MatrixPath, s: &DMatrix<f64>) -> Result<MatrixPath> {
    u.map(|_, m| m * s * m.transpose())
}

/// How the connection of a constructed system was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConnectionSource {
    /// Supplied as expressions.
    Given,
    /// `−U̇Uᵀ` from an expression matrix `U`, differentiated symbolically.
    Symbolic,
    /// `−U̇Uᵀ` from a sampled `U`, through the interpolant.
    Sampled,
}

#[derive(Clone, Debug)]
pub struct Construction {
    pub system: EmSystem,
    pub multiplier: MultiplierCandidate,
    pub gamma: TimeMatrix,
    pub source: ConnectionSource,
    pub weqn_residual: f64,
    pub warnings: Vec<String>,
}

/// Tolerance on the W-condition before constructing.
pub const WEQN_TOL: f64 = 1e-10;

/// Builds the system `ẍ = −2Γẋ − ∂V/∂x − Γ̇x` with `A = Γx` and
/// `V = W(t, Uᵀx) + ½xᵀΓ²x`, together with `g = U S Uᵀ`.
///
/// `gamma` overrides `Γ = −U̇Uᵀ` when the connection is known in closed
/// form. `points` are used to check the W-condition, read as `(t, y)`.
pub fn construct_system(
    w: &Expression,
    s: &DMatrix<f64>,
    u: &TimeMatrix,
    gamma: Option<&ExprMatrix>,
    points: &[EvalPoint],
) -> Result<Construction> {
    let n = s.nrows();
    if !s.is_square() || u.shape() != (n, n) {
        return Err(Error::Dimension("S and U must be n×n".into()));
    }
    if w.max_index() > n || w.mentions_velocity() {
        return Err(Error::Invalid("W must depend on t and y1..yn only".into()));
    }
    let defect = asymmetry(s);
    if defect > 1e-12 * (1.0 + max_abs(s)) {
        return Err(Error::NotSymmetric { what: "S", defect });
    }
    let weqn_residual = check_weqn(w, s, points)?;
    if weqn_residual > WEQN_TOL * (1.0 + max_abs(s)) {
        return Err(Error::WConditionFailed(weqn_residual));
    }
    let mut warnings = Vec::new();
    let ev = crate::linalg::symmetric_eigenvalues(s);
    if ev.iter().any(|v| v.abs() <= 1e-8) {
        warnings.push("S is singular, so the multiplier is singular".to_string());
    }

    if let TimeMatrix::Exprs(ue) = u {
        let (gamma, source) = match gamma {
            Some(g) => (g.clone(), ConnectionSource::Given),
            None => (negate(&ue.diff_t().matmul(&ue.transpose())?), ConnectionSource::Symbolic),
        };
        let x: Vec<Expression> = (0..n).map(Expression::x).collect();
        let ut = ue.transpose();
        let y: Vec<Expression> = (0..n).map(|i| row_times(&ut, i, &x)).collect();
        let gx: Vec<Expression> = (0..n).map(|i| row_times(&gamma, i, &x)).collect();
        let zeros = vec![Expression::Const(0.0); n];
        let w_x = w.substitute(&Expression::t(), &y, &zeros);
        // ½xᵀΓ²x = −½|Γx|² for skew Γ
        let quad = sum(gx.iter().map(|e| product(e.clone(), e.clone())));
        let v = sum([w_x, product(Expression::Const(-0.5), quad)]);
        let system = EmSystem::from_expressions(n, v, gx)?;
        let g = ue.matmul(&ExprMatrix::from_constant(s))?.matmul(&ut)?;
        return Ok(Construction {
            system,
            multiplier: MultiplierCandidate::from_exprs(g),
            gamma: TimeMatrix::Exprs(gamma),
            source,
            weqn_residual,
            warnings,
        });
    }

    let (gamma_tm, source) = match gamma {
        Some(g) => (TimeMatrix::Exprs(g.clone()), ConnectionSource::Given),
        None => (connection_from_u(u)?, ConnectionSource::Sampled),
    };
    let exact = u.is_exact() && gamma_tm.is_exact();
    let uu = Arc::new(u.clone());
    let gg = Arc::new(gamma_tm.clone());
    let w = Arc::new(w.clone());
    let v = {
        let (uu, gg) = (uu.clone(), gg.clone());
        move |t: HyperDual, x: &[HyperDual]| {
            let um = uu.eval_lifted(t)?;
            let y = lifted_mul(&lifted_transpose(&um, n, n), x, n, n, 1);
            let zeros = vec![HyperDual::real(0.0); n];
            let mut v = w.eval_with(t, &y, &zeros)?;
            let gx = lifted_mul(&gg.eval_lifted(t)?, x, n, n, 1);
            for e in gx {
                v = v - (e * e).scale(0.5);
            }
            Ok(v)
        }
    };
    let a = {
        let gg = gg.clone();
        move |t: HyperDual, x: &[HyperDual]| Ok(lifted_mul(&gg.eval_lifted(t)?, x, n, n, 1))
    };
    let mut pots = FnPotentials::new(n, "time-only connection", v, a);
    if !exact {
        pots = pots.inexact();
    }
    let s_rm = crate::path::row_major(s);
    let g = move |t: HyperDual| {
        let um = uu.eval_lifted(t)?;
        let s_l: Vec<HyperDual> = s_rm.iter().map(|&v| HyperDual::real(v)).collect();
        let us = lifted_mul(&um, &s_l, n, n, n);
        Ok(lifted_mul(&us, &lifted_transpose(&um, n, n), n, n, n))
    };
    let mut gm = FnMatrix::new(n, n, g);
    if !exact {
        gm = gm.inexact();
    }
    Ok(Construction {
        system: EmSystem::new(Arc::new(pots)),
        multiplier: MultiplierCandidate::new(TimeMatrix::Func(gm)),
        gamma: gamma_tm,
        source,
        weqn_residual,
        warnings,
    })
}

/// `Γ = −U̇Uᵀ` as a lifted matrix function.
pub fn connection_from_u(u: &TimeMatrix) -> Result<TimeMatrix> {
    let n = u.shape().0;
    let ud = Arc::new(u.derivative()?);
    let uu = Arc::new(u.clone());
    let exact = u.is_exact();
    let f = move |t: HyperDual| {
        let d = ud.eval_lifted(t)?;
        let um = uu.eval_lifted(t)?;
        let prod = lifted_mul(&d, &lifted_transpose(&um, n, n), n, n, n);
        Ok(prod.into_iter().map(|v| -v).collect())
    };
    let fm = FnMatrix::new(n, n, f);
    Ok(TimeMatrix::Func(if exact { fm } else { fm.inexact() }))
}

fn negate(m: &ExprMatrix) -> ExprMatrix {
    let (r, c) = m.shape();
    let entries = m.entries().iter().map(|e| crate::expr::s_neg(e.clone())).collect();
    ExprMatrix::new(r, c, entries).expect("same shape")
}

fn row_times(m: &ExprMatrix, i: usize, x: &[Expression]) -> Expression {
    sum((0..x.len()).map(|j| product(m.get(i, j).clone(), x[j].clone())))
}
