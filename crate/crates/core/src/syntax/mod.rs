//! MiniJML surface syntax: lexer, AST, recursive-descent parser and the
//! canonical pretty printer.

pub mod ast;
pub mod lexer;
mod parser;
mod pretty;

use std::fmt;

pub use ast::Pos;
pub use parser::{parse, parse_formula, parse_named};
pub use pretty::{expr as pretty_expr, pretty_print};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub line: u32,
    pub col: u32,
    pub message: String,
    /// Tokens that would have been accepted at this point.
    pub expected: Vec<String>,
}

impl ParseError {
    pub fn new(pos: Pos, message: impl Into<String>, expected: Vec<String>) -> ParseError {
        ParseError { line: pos.line, col: pos.col, message: message.into(), expected }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}
