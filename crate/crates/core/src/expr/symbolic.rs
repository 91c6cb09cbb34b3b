//! Tree-level derivative and substitution, used when a builder needs a
//! derived coefficient (a time derivative such as `θ'`) as an expression of
//! its own. Only trivial zero/one folding is applied.

use super::ast::{BinOp, Expression, Func, Var};

fn is_const(e: &Expression, v: f64) -> bool {
    matches!(e, Expression::Const(c) if *c == v)
}

pub(crate) fn s_add(a: Expression, b: Expression) -> Expression {
    if is_const(&a, 0.0) {
        b
    } else if is_const(&b, 0.0) {
        a
    } else {
        Expression::add(a, b)
    }
}

pub(crate) fn s_sub(a: Expression, b: Expression) -> Expression {
    if is_const(&b, 0.0) {
        a
    } else if is_const(&a, 0.0) {
        s_neg(b)
    } else {
        Expression::sub(a, b)
    }
}

pub(crate) fn s_mul(a: Expression, b: Expression) -> Expression {
    if is_const(&a, 0.0) || is_const(&b, 0.0) {
        Expression::Const(0.0)
    } else if is_const(&a, 1.0) {
        b
    } else if is_const(&b, 1.0) {
        a
    } else {
        Expression::mul(a, b)
    }
}

pub(crate) fn s_div(a: Expression, b: Expression) -> Expression {
    if is_const(&a, 0.0) {
        Expression::Const(0.0)
    } else if is_const(&b, 1.0) {
        a
    } else {
        Expression::div(a, b)
    }
}

pub(crate) fn s_neg(a: Expression) -> Expression {
    match a {
        Expression::Const(c) => Expression::Const(-c),
        Expression::Unary(Func::Neg, inner) => *inner,
        other => Expression::neg(other),
    }
}

impl Expression {
    /// Derivative of the tree with respect to `var`.
    pub fn diff(&self, var: Var) -> Expression {
        use Expression as E;
        match self {
            E::Const(_) => E::Const(0.0),
            E::Var(v) => E::Const(if *v == var { 1.0 } else { 0.0 }),
            E::Unary(func, a) => {
                let da = a.diff(var);
                if is_const(&da, 0.0) {
                    return E::Const(0.0);
                }
                let a = (**a).clone();
                let outer = match func {
                    Func::Neg => return s_neg(da),
                    Func::Sin => E::unary(Func::Cos, a),
                    Func::Cos => s_neg(E::unary(Func::Sin, a)),
                    Func::Tan => {
                        let tn = E::unary(Func::Tan, a);
                        E::add(E::Const(1.0), E::mul(tn.clone(), tn))
                    }
                    Func::Exp => E::unary(Func::Exp, a),
                    Func::Log => E::div(E::Const(1.0), a),
                    Func::Sqrt => E::div(E::Const(0.5), E::unary(Func::Sqrt, a)),
                };
                s_mul(outer, da)
            }
            E::Binary(op, a, b) => {
                let da = a.diff(var);
                let db = b.diff(var);
                let (a, b) = ((**a).clone(), (**b).clone());
                match op {
                    BinOp::Add => s_add(da, db),
                    BinOp::Sub => s_sub(da, db),
                    BinOp::Mul => s_add(s_mul(da, b), s_mul(a, db)),
                    BinOp::Div => s_div(
                        s_sub(s_mul(da, b.clone()), s_mul(a, db)),
                        E::mul(b.clone(), b),
                    ),
                    BinOp::Pow => {
                        if let E::Const(k) = b {
                            // d(a^k) = k a^(k-1) da
                            if k == 0.0 {
                                return E::Const(0.0);
                            }
                            let lowered = if k == 1.0 {
                                E::Const(1.0)
                            } else {
                                E::pow(a, E::Const(k - 1.0))
                            };
                            s_mul(s_mul(E::Const(k), lowered), da)
                        } else {
                            // d(a^b) = a^b (db ln a + b da / a)
                            let pw = E::pow(a.clone(), b.clone());
                            let term1 = s_mul(db, E::unary(Func::Log, a.clone()));
                            let term2 = s_div(s_mul(b, da), a);
                            s_mul(pw, s_add(term1, term2))
                        }
                    }
                }
            }
        }
    }

    /// Replaces `t`, `x_i`, `xdot_i` by the given trees. Variables without a
    /// replacement (index past the slice) are left as they are.
    pub fn substitute(&self, t: &Expression, x: &[Expression], xdot: &[Expression]) -> Expression {
        use Expression as E;
        match self {
            E::Const(c) => E::Const(*c),
            E::Var(Var::T) => t.clone(),
            E::Var(Var::X(i)) => x.get(*i).cloned().unwrap_or(E::Var(Var::X(*i))),
            E::Var(Var::XDot(i)) => xdot.get(*i).cloned().unwrap_or(E::Var(Var::XDot(*i))),
            E::Unary(f, a) => E::unary(*f, a.substitute(t, x, xdot)),
            E::Binary(op, a, b) => {
                E::binary(*op, a.substitute(t, x, xdot), b.substitute(t, x, xdot))
            }
        }
    }
}

/// `Σ_k terms[k]` with zero folding.
pub fn sum(terms: impl IntoIterator<Item = Expression>) -> Expression {
    terms.into_iter().fold(Expression::Const(0.0), s_add)
}

/// Product with zero/one folding.
pub fn product(a: Expression, b: Expression) -> Expression {
    s_mul(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, EvalPoint};

    #[test]
    fn symbolic_derivative_matches_dual_derivative() {
        let texts = [
            "sin(t)*x1^3 - exp(x2/3) + log(2 + x1^2)",
            "tan(0.3*t) * sqrt(4 + x2) / (1 + x1^2)",
            "(1.5 + x1^2)^(0.5*t + 1) - neg(cos(x1*x2))",
        ];
        let pt = EvalPoint::at(0.4, vec![0.7, -0.2]);
        for text in texts {
            let e = parse(text, 2).unwrap();
            for var in [Var::T, Var::X(0), Var::X(1)] {
                let sym = e.diff(var).eval(&pt).unwrap();
                let ad = e.deriv(&pt, &[var]).unwrap();
                assert!((sym - ad).abs() <= 1e-12 * (1.0 + ad.abs()), "{text} d/{var}");
            }
        }
    }

    #[test]
    fn substitution_composes() {
        let f = parse("x1^2 + t*x2", 2).unwrap();
        let g = f.substitute(
            &parse("2*t", 1).unwrap(),
            &[parse("x1 + 1", 1).unwrap(), parse("t", 1).unwrap()],
            &[],
        );
        let pt = EvalPoint::at(0.5, vec![3.0]);
        assert_eq!(g.eval(&pt).unwrap(), 16.0 + 1.0 * 0.5);
    }
}
