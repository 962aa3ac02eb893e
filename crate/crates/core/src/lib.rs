//! Quantum beta-calculus: beta-maps, beta-integrals and beta-derivatives,
//! Chebyshev-type functionals, and numerical checks of Gruss-type
//! inequalities built on them.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod applications;
pub mod beta_map;
pub mod calculus;
pub mod error;
pub mod exec;
pub mod expr;
pub mod functionals;
pub mod inequalities;
pub mod quadrature;
mod serde_float;
pub mod suite;

pub use beta_map::{BetaMap, Interval, MapKind, Orbit};
pub use error::{Error, Result};
pub use exec::Execution;
pub use expr::{parse, Expr, ParseError, RealFn};
pub use quadrature::{IntegralResult, TruncationConfig};
