//! The protocol language: AST, parser, canonical printer and the static
//! analyses both checkers build on.

mod analysis;
mod ast;
mod lexer;
mod parser;
mod print;

use thiserror::Error;

pub use analysis::{
    classify_variables, instantiated_variables, instantiating_query, new_variables,
    path_conditions, Occurrence, ProtocolIndex,
};
pub use ast::*;
pub use parser::parse_protocol;
pub use print::{print_protocol, query_text};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("semantic error at {line}:{col}: {message}")]
    Semantic {
        line: usize,
        col: usize,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("no query {0} in protocol")]
    UnknownQuery(QueryId),
    #[error("variable `{0}` is never instantiated")]
    UnknownVariable(String),
}
