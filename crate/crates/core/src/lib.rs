//! Point-equivalence analysis of second-order ODEs `y'' = f(x, y, y')`.
//!
//! The crate is organised bottom-up: [`symbolic`] is the expression kernel every other module
//! computes on, [`cartan`] produces the normal Cartan connection and its curvature,
//! [`projective`] handles equations cubic in `y'`, [`classify`] runs the invariant-based
//! classification and [`distribution`] collects vector-field and Lie-group utilities.

pub mod cartan;
pub mod classify;
pub mod distribution;
pub mod forms;
pub mod jet;
pub mod lie;
pub mod projective;
pub mod scalar;
pub mod serial;
pub mod symbolic;

pub use scalar::Scalar;
pub use symbolic::{Assumptions, Expr, TriBool};

/// Exact rational numbers used for every symbolic constant.
pub type Rational = num_rational::BigRational;
/// Default floating type of the numeric layers.
pub type Real = f64;
