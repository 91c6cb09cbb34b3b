//! Three-dimensional example with a connection depending on time only.
//!
//! Start from `ÿ + ∂W/∂y = 0` with `W = a(t)(y₁ − p y₂)³`, which admits the
//! constant multipliers `S` of [`Sec5Params::multiplier`], and couple the
//! coordinates with the rotation `U(θ)` about the first axis.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{s_neg, EvalPoint, Expression, Func, Var};
use crate::path::{ExprMatrix, TimeMatrix};
use crate::timeonly::{construct_system, Construction};

/// Free constants of the admissible `S` for `W = a(t)(y₁ − p y₂)³`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sec5Params {
    pub s1: f64,
    pub s3: f64,
    pub k: f64,
    pub m: f64,
    pub p: f64,
}

impl Default for Sec5Params {
    fn default() -> Self {
        Self { s1: 1.0, s3: 1.0, k: 1.0, m: 0.0, p: 1.0 }
    }
}

impl Sec5Params {
    /// `[[s₁, k, mp], [k, s₁ + (k/p)(1 − p²), m], [mp, m, s₃]]`
    pub fn multiplier(&self) -> Result<DMatrix<f64>> {
        let Self { s1, s3, k, m, p } = *self;
        if p == 0.0 {
            return Err(Error::Invalid("p must be nonzero".into()));
        }
        Ok(DMatrix::from_row_slice(
            3,
            3,
            &[s1, k, m * p, k, s1 + (k / p) * (1.0 - p * p), m, m * p, m, s3],
        ))
    }

    /// `a(t)(y₁ − p y₂)³` over `t, x1 = y₁, x2 = y₂, x3 = y₃`.
    pub fn potential(&self, a: &Expression) -> Expression {
        let diff = Expression::sub(Expression::x(0), Expression::mul(Expression::Const(self.p), Expression::x(1)));
        Expression::mul(a.clone(), Expression::powi(diff, 3))
    }
}

/// Rotation about the first axis by `θ(t)`.
pub fn rotation_x(theta: &Expression) -> ExprMatrix {
    let c = Expression::unary(Func::Cos, theta.clone());
    let s = Expression::unary(Func::Sin, theta.clone());
    let z = || Expression::Const(0.0);
    ExprMatrix::new(
        3,
        3,
        vec![Expression::Const(1.0), z(), z(), z(), c.clone(), s_neg(s.clone()), z(), s, c],
    )
    .expect("3×3")
}

/// `Γ = −U̇Uᵀ = σ[[0, 0, 0], [0, 0, 1], [0, −1, 0]]` with `σ = θ̇`.
pub fn rotation_connection(theta: &Expression) -> ExprMatrix {
    let sigma = theta.diff(Var::T);
    let z = || Expression::Const(0.0);
    ExprMatrix::new(3, 3, vec![z(), z(), z(), z(), z(), sigma.clone(), z(), s_neg(sigma), z()])
        .expect("3×3")
}

/// Builds the coupled system for general parameters.
pub fn sec5_build_with(
    a: &Expression,
    theta: &Expression,
    params: &Sec5Params,
    points: &[EvalPoint],
) -> Result<Construction> {
    for (e, name) in [(a, "a"), (theta, "theta")] {
        if e.max_index() > 0 || e.mentions_velocity() {
            return Err(Error::Invalid(format!("{name} must depend on t only")));
        }
    }
    let w = params.potential(a);
    let s = params.multiplier()?;
    let u = TimeMatrix::Exprs(rotation_x(theta));
    construct_system(&w, &s, &u, Some(&rotation_connection(theta)), points)
}

/// The example with `s₁ = s₃ = k = p = 1`, `m = 0`, whose multiplier is
/// `[[1, cos θ, sin θ], [cos θ, 1, 0], [sin θ, 0, 1]]` with eigenvalues 0, 1, 2.
pub fn sec5_build(a: &Expression, theta: &Expression, points: &[EvalPoint]) -> Result<Construction> {
    sec5_build_with(a, theta, &Sec5Params::default(), points)
}

/// `a(t)(x₁ − cos θ x₂ − sin θ x₃)³ − ½θ̇²(x₂² + x₃²)` evaluated directly.
pub fn expected_potential(a: f64, theta: f64, sigma: f64, x: &[f64]) -> f64 {
    let (s, c) = theta.sin_cos();
    a * (x[0] - c * x[1] - s * x[2]).powi(3) - 0.5 * sigma * sigma * (x[1] * x[1] + x[2] * x[2])
}

/// `[[1, cos θ, sin θ], [cos θ, 1, 0], [sin θ, 0, 1]]`
pub fn expected_multiplier(theta: f64) -> DMatrix<f64> {
    let (s, c) = theta.sin_cos();
    DMatrix::from_row_slice(3, 3, &[1.0, c, s, c, 1.0, 0.0, s, 0.0, 1.0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::sampling::{sample_cloud, CloudSpec};

    #[test]
    fn reproduces_potential_and_multiplier() {
        let a = parse("1 + 0.5*t", 1).unwrap();
        let theta = parse("t^2", 1).unwrap();
        let pts = sample_cloud(3, &CloudSpec::default());
        let c = sec5_build(&a, &theta, &pts).unwrap();
        assert!(c.warnings.iter().any(|w| w.contains("singular")));
        for p in &pts {
            let v = c.system.scalar_potential(p.t, &p.x).unwrap();
            let want = expected_potential(1.0 + 0.5 * p.t, p.t * p.t, 2.0 * p.t, &p.x);
            assert!((v - want).abs() < 1e-12);
            let g = c.multiplier.value(p.t).unwrap();
            assert!((g - expected_multiplier(p.t * p.t)).amax() < 1e-14);
        }
    }

    #[test]
    fn general_family_satisfies_w_condition() {
        let params = Sec5Params { s1: 2.0, s3: -1.0, k: 0.7, m: 0.3, p: 1.5 };
        let a = parse("cos(t)", 1).unwrap();
        let pts = sample_cloud(3, &CloudSpec::default());
        let r = crate::timeonly::check_weqn(&params.potential(&a), &params.multiplier().unwrap(), &pts).unwrap();
        assert!(r < 1e-10);
    }
}
