use super::ast::{BinOp, Expression, Func, Var};
use super::dual::{Dual, HyperDual, Scalar};
use super::ExprError;

/// A point `(t, x, xdot)` of the evaluation space.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalPoint {
    pub t: f64,
    pub x: Vec<f64>,
    pub xdot: Vec<f64>,
}

impl EvalPoint {
    pub fn new(t: f64, x: Vec<f64>, xdot: Vec<f64>) -> Self {
        Self { t, x, xdot }
    }

    /// Point with zero velocities.
    pub fn at(t: f64, x: Vec<f64>) -> Self {
        let n = x.len();
        Self { t, x, xdot: vec![0.0; n] }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite()
            && self.x.iter().all(|v| v.is_finite())
            && self.xdot.iter().all(|v| v.is_finite())
    }

    pub fn get(&self, var: Var) -> Option<f64> {
        match var {
            Var::T => Some(self.t),
            Var::X(i) => self.x.get(i).copied(),
            Var::XDot(i) => self.xdot.get(i).copied(),
        }
    }
}

fn check<S: Scalar>(value: S, op: &'static str) -> Result<S, ExprError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(ExprError::NonFinite { op })
    }
}

fn apply_func<S: Scalar>(func: Func, a: S) -> Result<S, ExprError> {
    let x = a.re();
    let out = match func {
        Func::Neg => -a,
        Func::Sin => {
            let (s, c) = x.sin_cos();
            a.chain(s, c, -s)
        }
        Func::Cos => {
            let (s, c) = x.sin_cos();
            a.chain(c, -s, -c)
        }
        Func::Tan => {
            let c = x.cos();
            if c == 0.0 {
                return Err(ExprError::Domain { op: "tan", value: x });
            }
            let tn = x.tan();
            let sec2 = 1.0 + tn * tn;
            a.chain(tn, sec2, 2.0 * tn * sec2)
        }
        Func::Exp => {
            let e = x.exp();
            a.chain(e, e, e)
        }
        Func::Log => {
            if x <= 0.0 {
                return Err(ExprError::Domain { op: "log", value: x });
            }
            a.chain(x.ln(), 1.0 / x, -1.0 / (x * x))
        }
        Func::Sqrt => {
            if x < 0.0 || (x == 0.0 && !a.is_real()) {
                return Err(ExprError::Domain { op: "sqrt", value: x });
            }
            let r = x.sqrt();
            a.chain(r, 0.5 / r, -0.25 / (r * x))
        }
    };
    check(out, func.name())
}

/// Integer power by repeated squaring; exact in the dual parts.
fn powi<S: Scalar>(base: S, k: i64) -> Result<S, ExprError> {
    let mut exp = k.unsigned_abs();
    let mut acc = S::constant(1.0);
    let mut sq = base;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * sq;
        }
        exp >>= 1;
        if exp > 0 {
            sq = sq * sq;
        }
    }
    if k < 0 {
        if acc.re() == 0.0 {
            return Err(ExprError::Domain { op: "pow", value: base.re() });
        }
        acc = S::constant(1.0) / acc;
    }
    Ok(acc)
}

const MAX_INTEGER_EXPONENT: f64 = 1024.0;

fn apply_binary<S: Scalar>(op: BinOp, a: S, b: S) -> Result<S, ExprError> {
    let out = match op {
        BinOp::Add => a + b,
        BinOp::Sub => a - b,
        BinOp::Mul => a * b,
        BinOp::Div => {
            if b.re() == 0.0 {
                return Err(ExprError::Domain { op: "division", value: 0.0 });
            }
            a / b
        }
        BinOp::Pow => {
            let e = b.re();
            if b.is_real() && e.fract() == 0.0 && e.abs() <= MAX_INTEGER_EXPONENT {
                powi(a, e as i64)?
            } else {
                let base = a.re();
                if base <= 0.0 {
                    return Err(ExprError::Domain { op: "pow", value: base });
                }
                let ln = a.chain(base.ln(), 1.0 / base, -1.0 / (base * base));
                let prod = ln * b;
                let v = prod.re().exp();
                prod.chain(v, v, v)
            }
        }
    };
    check(out, "binary operation")
}

impl Expression {
    /// Evaluates over any [`Scalar`] type.
    ///
    /// Variables beyond the supplied slices are an error.
    pub fn eval_with<S: Scalar>(&self, t: S, x: &[S], xdot: &[S]) -> Result<S, ExprError> {
        match self {
            Expression::Const(c) => Ok(S::constant(*c)),
            Expression::Var(Var::T) => Ok(t),
            Expression::Var(Var::X(i)) => x
                .get(*i)
                .copied()
                .ok_or(ExprError::DimensionMismatch { index: i + 1, dim: x.len() }),
            Expression::Var(Var::XDot(i)) => xdot
                .get(*i)
                .copied()
                .ok_or(ExprError::DimensionMismatch { index: i + 1, dim: xdot.len() }),
            Expression::Unary(func, a) => apply_func(*func, a.eval_with(t, x, xdot)?),
            Expression::Binary(op, a, b) => {
                apply_binary(*op, a.eval_with(t, x, xdot)?, b.eval_with(t, x, xdot)?)
            }
        }
    }

    pub fn eval(&self, p: &EvalPoint) -> Result<f64, ExprError> {
        self.eval_with(p.t, &p.x, &p.xdot)
    }

    /// Evaluates an expression of `t` alone.
    pub fn eval_t(&self, t: f64) -> Result<f64, ExprError> {
        self.eval_with(t, &[], &[])
    }

    /// Exact first (`vars.len() == 1`) or second (`vars.len() == 2`) partial
    /// derivative at `p`.
    pub fn deriv(&self, p: &EvalPoint, vars: &[Var]) -> Result<f64, ExprError> {
        for v in vars {
            if p.get(*v).is_none() {
                return Err(ExprError::DimensionMismatch {
                    index: match v {
                        Var::T => 0,
                        Var::X(i) | Var::XDot(i) => i + 1,
                    },
                    dim: p.dim(),
                });
            }
        }
        match vars {
            [v] => {
                let seed = |var: Var, value: f64| {
                    if var == *v {
                        Dual::variable(value)
                    } else {
                        Dual::constant(value)
                    }
                };
                let t = seed(Var::T, p.t);
                let x: Vec<Dual> =
                    p.x.iter().enumerate().map(|(i, &xi)| seed(Var::X(i), xi)).collect();
                let xd: Vec<Dual> =
                    p.xdot.iter().enumerate().map(|(i, &vi)| seed(Var::XDot(i), vi)).collect();
                Ok(self.eval_with(t, &x, &xd)?.eps)
            }
            [v1, v2] => {
                let seed = |var: Var, value: f64| HyperDual::seeded(value, var == *v1, var == *v2);
                let t = seed(Var::T, p.t);
                let x: Vec<HyperDual> =
                    p.x.iter().enumerate().map(|(i, &xi)| seed(Var::X(i), xi)).collect();
                let xd: Vec<HyperDual> =
                    p.xdot.iter().enumerate().map(|(i, &vi)| seed(Var::XDot(i), vi)).collect();
                Ok(self.eval_with(t, &x, &xd)?.e12)
            }
            _ => Err(ExprError::DerivativeOrder(vars.len())),
        }
    }
}
