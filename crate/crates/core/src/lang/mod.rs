//! Abstract syntax, concrete syntax and primitive signatures.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod prims;
pub mod printer;

use thiserror::Error;

pub use ast::{Def, Loc, Monad, Param, PrimArg, Program, Side, Term, TermKind, Ty};
pub use parser::{parse_program, parse_term, parse_ty};
pub use prims::{prim_sig, PrimError, PrimOp};
pub use printer::{print_program, print_term, print_ty};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ParseError {
    #[error("{loc}: syntax error: {msg}")]
    Syntax { loc: Loc, msg: String },
    #[error("{loc}: p-index {value} is below 1")]
    PIndexBelowOne { loc: Loc, value: f64 },
    #[error("{loc}: negative sensitivity {value}")]
    NegativeSens { loc: Loc, value: f64 },
}

impl ParseError {
    pub fn syntax(loc: Loc, msg: impl Into<String>) -> ParseError {
        ParseError::Syntax { loc, msg: msg.into() }
    }

    pub fn loc(&self) -> Loc {
        match self {
            ParseError::Syntax { loc, .. }
            | ParseError::PIndexBelowOne { loc, .. }
            | ParseError::NegativeSens { loc, .. } => *loc,
        }
    }
}
