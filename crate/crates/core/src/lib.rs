//! Implicit viscosity iteration for nonexpansive maps on `R^d`.
//!
//! Each outer step solves `ξ_n = ε_n·f(ξ_n) + (1 − ε_n)·T(ξ_n)` for a
//! contraction `f` and a nonexpansive `T` (or a family `T_t` indexed by a
//! semigroup) by Picard iteration, and records a trace that the
//! [`diagnostics`] module checks after the fact.

pub mod diagnostics;
pub mod error;
pub mod hilbert;
pub mod matrix;
pub mod operators;
pub mod sampling;
pub mod schemes;
pub mod semigroup;

pub use error::{Error, Result};
pub use hilbert::{inner, norm, TolerancePolicy, Vector};
pub use matrix::Matrix;
pub use operators::{make_operator, LipschitzClass, Operator, OperatorSpec};
