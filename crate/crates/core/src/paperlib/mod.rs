//! Built-in parametric families: the two- and three-dimensional examples
//! with time-dependent multipliers and the rotation-coupled example with a
//! connection depending on time only.

pub mod n2;
pub mod n3;
pub mod sec5;

pub use n2::{N2Build, N2Family};
pub use n3::{N3Build, N3Family, PotentialMode};
pub use sec5::{sec5_build, sec5_build_with, Sec5Params};

use crate::error::Result;
use crate::expr::parse;

/// Parameters used by the `demo n2` run.
pub fn default_n2() -> Result<N2Family> {
    N2Family::new(parse("0.2 + 0.1*sin(t)", 1)?, parse("1", 1)?, parse("2 + 0.5*cos(t)", 1)?, 0.6, 1.0, 3.0)
}

/// Parameters used by the `demo n3` run.
pub fn default_n3() -> Result<N3Family> {
    N3Family::new(
        parse("0.5*sin(t)", 1)?,
        1.0,
        3.0,
        parse("x1*x2 + sin(t)*x1", 2)?,
        parse("sin(t)*x1^2*x2 + x1^2 + x2^2", 2)?,
        parse("cos(t)*x1^3 + x1^2", 1)?,
    )
}
