//! Symbolic expressions: representation, parsing, normalization, calculus and zero testing.

pub mod assume;
pub mod cubic;
pub mod diff;
mod display;
pub mod eval;
pub mod expr;
pub mod interval;
pub mod parse;
pub(crate) mod ratfun;
pub mod zero;

pub use assume::{AssumptionError, Assumptions, Sign};
pub use cubic::{cubic_coefficients, CubicForm, Undecidable};
pub use diff::total_derivative;
pub use eval::{EvalError, Evaluation, Point};
pub use expr::{Expr, Func, Node, Symbol};
pub use parse::{parse, parse_default, Chart, ParseError};
pub use zero::{is_zero, is_zero_detailed, TriBool, ZeroTest};
