use cdd_chc_core::ChcError;
use thiserror::Error;

use crate::sexp::{Pos, SyntaxError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at {0}")]
    Syntax(#[from] SyntaxError),
    #[error("{pos}: unsupported: {what}")]
    Unsupported { pos: Pos, what: String },
    #[error("{pos}: {msg}")]
    Invalid { pos: Pos, msg: String },
    #[error("no query clause")]
    NoQuery,
    #[error(transparent)]
    Chc(ChcError),
}

impl From<ChcError> for ParseError {
    fn from(e: ChcError) -> Self {
        match e {
            ChcError::NoQuery => ParseError::NoQuery,
            e => ParseError::Chc(e),
        }
    }
}
