use std::fmt;

/// A coordinate of the evaluation space `(t, x, xdot)`.
///
/// Indices are zero-based internally and printed one-based (`x1`, `xdot1`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    T,
    X(usize),
    XDot(usize),
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::T => write!(f, "t"),
            Var::X(i) => write!(f, "x{}", i + 1),
            Var::XDot(i) => write!(f, "xdot{}", i + 1),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Neg,
}

impl Func {
    pub const ALL: [Func; 7] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Neg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Neg => "neg",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

/// Expression tree over `(t, x_1..x_n, xdot_1..xdot_n)`.
///
/// Trees are immutable once built and evaluated exactly as written.
#[derive(Clone, Debug, PartialEq)]
pub enum Expression {
    Const(f64),
    Var(Var),
    Unary(Func, Box<Expression>),
    Binary(BinOp, Box<Expression>, Box<Expression>),
}

impl Expression {
    pub fn constant(value: f64) -> Self {
        Expression::Const(value)
    }

    pub fn t() -> Self {
        Expression::Var(Var::T)
    }

    /// `x_{i+1}` (zero-based index).
    pub fn x(i: usize) -> Self {
        Expression::Var(Var::X(i))
    }

    pub fn xdot(i: usize) -> Self {
        Expression::Var(Var::XDot(i))
    }

    pub fn unary(f: Func, arg: Expression) -> Self {
        Expression::Unary(f, Box::new(arg))
    }

    pub fn binary(op: BinOp, lhs: Expression, rhs: Expression) -> Self {
        Expression::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(lhs: Expression, rhs: Expression) -> Self {
        Self::binary(BinOp::Add, lhs, rhs)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn sub(lhs: Expression, rhs: Expression) -> Self {
        Self::binary(BinOp::Sub, lhs, rhs)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn mul(lhs: Expression, rhs: Expression) -> Self {
        Self::binary(BinOp::Mul, lhs, rhs)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn div(lhs: Expression, rhs: Expression) -> Self {
        Self::binary(BinOp::Div, lhs, rhs)
    }

    pub fn pow(base: Expression, exponent: Expression) -> Self {
        Self::binary(BinOp::Pow, base, exponent)
    }

    pub fn powi(base: Expression, k: i32) -> Self {
        Self::pow(base, Expression::Const(f64::from(k)))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(arg: Expression) -> Self {
        Self::unary(Func::Neg, arg)
    }

    /// Largest `x`/`xdot` index used (one-based), 0 if none.
    pub fn max_index(&self) -> usize {
        match self {
            Expression::Const(_) | Expression::Var(Var::T) => 0,
            Expression::Var(Var::X(i)) | Expression::Var(Var::XDot(i)) => i + 1,
            Expression::Unary(_, a) => a.max_index(),
            Expression::Binary(_, a, b) => a.max_index().max(b.max_index()),
        }
    }

    pub fn mentions_velocity(&self) -> bool {
        match self {
            Expression::Var(Var::XDot(_)) => true,
            Expression::Const(_) | Expression::Var(_) => false,
            Expression::Unary(_, a) => a.mentions_velocity(),
            Expression::Binary(_, a, b) => a.mentions_velocity() || b.mentions_velocity(),
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Expression::Const(_) | Expression::Var(_) => 1,
            Expression::Unary(_, a) => 1 + a.node_count(),
            Expression::Binary(_, a, b) => 1 + a.node_count() + b.node_count(),
        }
    }
}

/// Prints fully parenthesised text that parses back to the same tree.
impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expression::Const(c) => {
                if c.is_sign_negative() {
                    write!(f, "({c:?})")
                } else {
                    write!(f, "{c:?}")
                }
            }
            Expression::Var(v) => write!(f, "{v}"),
            Expression::Unary(func, a) => write!(f, "{}({a})", func.name()),
            Expression::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
        }
    }
}
