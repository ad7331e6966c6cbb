//! The protocol language: syntax, parsing and scenario files.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod printer;
pub mod scenario;

pub use ast::{var, Cmd, Expr, ForkTarget, LabelExpr, Var};
pub use lexer::ParseError;
pub use parser::{parse_expr, parse_pattern, parse_program};
pub use printer::{print_expr, print_program};
pub use scenario::{NamedProperty, Scenario, ScenarioError};
