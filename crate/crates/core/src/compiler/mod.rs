//! Compilation of symbolic expressions into exact networks built from ReLU,
//! ELU and NLReLU units.

mod ast;
mod bounds;
mod compile;
pub mod compose;
pub mod gadget;
mod parse;
mod random;
mod verify;

pub use ast::{ExprAst, Factor, Term};
pub use bounds::{infer_bounds, Bounds, BoundsTree};
pub use compile::{compile, lower};
pub use compose::{compose, extend_depth, linear_combination, widen_inputs};
pub use gadget::{exp_gadget, identity_chain, identity_gadget, log_gadget};
pub use parse::parse_expr;
pub use random::RandomFamily;
pub use verify::{relative_error, sample_in, verify, VerifyReport, RELATIVE_FLOOR};
