//! Exact counting, class membership and gadget synthesis for weighted
//! symmetric Boolean constraint problems.

pub mod ap;
pub mod constraint;
pub mod error;
pub mod frame;
pub mod gadget;
pub mod json;
pub mod rational;
pub mod taxonomy;

pub use constraint::{ComplementClass, Constraint};
pub use error::{Error, Result};
pub use rational::Rational;
