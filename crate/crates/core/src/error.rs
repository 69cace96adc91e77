use thiserror::Error;

use crate::syntax::{SyntaxError, WellFormednessReport};

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error: {0}")]
    Syntax(#[from] SyntaxError),

    #[error("global type is not well-formed:\n{0}")]
    IllFormed(WellFormednessReport),

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
