pub mod error;
pub mod expr;
pub mod linalg;
pub mod path;
pub mod quadrature;
pub mod sampling;

pub use error::{Error, Result};
pub mod model;
pub mod helmholtz;
pub mod lax;
pub mod decouple;
pub mod timeonly;
pub mod paperlib;
pub mod scenario;
