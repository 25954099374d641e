//! Jacobi last multipliers, Lagrangians and Noether integrals for planar ODE
//! models.

pub mod check;
pub mod error;
pub mod expr;
pub mod model;
pub mod multiplier;
pub mod noether;
pub mod numeric;
pub mod pipeline;
pub mod poly;
pub mod reduction;
pub mod variational;

pub use error::{JlmError, Result};
pub use expr::{Binding, Expr};
