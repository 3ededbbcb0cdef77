//! Symbolic expressions over chart coordinates and named parameters.
//!
//! Expressions are immutable trees with exact rational constants. Every
//! algebraic operation that needs a canonical answer goes through the
//! polynomial normal form in [`poly`].

pub mod equal;
pub mod expr;
pub mod parse;
pub mod poly;
pub mod symbol;

pub use equal::{equal, equal_with, Verdict};
pub use expr::{q, q_to_f64, Bindings, EvalError, Expr, Func, Q};
pub use parse::{parse, parse_symbol, ParseError, Scope};
pub use poly::Poly;
pub use symbol::{GenericNames, Names, Symbol};
