//! Expression language: parser, evaluator and forward-mode differentiation.
//!
//! Expressions are written over `t`, `x1..xn` and `xdot1..xdotn`. The same
//! tree evaluates over `f64`, [`Dual`] or [`HyperDual`], which gives exact
//! first and second partial derivatives without a tape.
//!
//! ```
//! use emtype::expr::{parse, EvalPoint, Var};
//!
//! let e = parse("x1^2 * sin(t)", 1).unwrap();
//! let p = EvalPoint::at(0.0, vec![3.0]);
//! assert_eq!(e.deriv(&p, &[Var::X(0), Var::T]).unwrap(), 6.0);
//! ```

mod ast;
mod dual;
mod eval;
mod parser;
mod symbolic;

pub use ast::{BinOp, Expression, Func, Var};
pub use dual::{Dual, HyperDual, Scalar};
pub use eval::EvalPoint;
pub use parser::parse;
pub use symbolic::{product, sum};

pub(crate) use symbolic::{s_add, s_mul, s_neg, s_sub};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("unknown identifier '{name}' at {pos}")]
    UnknownIdentifier { pos: usize, name: String },
    #[error("'{name}' at {pos} exceeds dimension {dim}")]
    IndexOutOfRange { pos: usize, name: String, dim: usize },
    #[error("variable index {index} not available at a point of dimension {dim}")]
    DimensionMismatch { index: usize, dim: usize },
    #[error("domain error in {op} at argument {value}")]
    Domain { op: &'static str, value: f64 },
    #[error("non-finite result in {op}")]
    NonFinite { op: &'static str },
    #[error("derivative order {0} not supported (1 or 2)")]
    DerivativeOrder(usize),
}
