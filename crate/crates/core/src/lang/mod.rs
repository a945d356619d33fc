//! MiniImp front end: parsing, static checks and lowering to a transition system.

pub mod ast;
pub mod lower;
pub mod lts;
pub mod parser;

use thiserror::Error;

pub use ast::{Ast, SourceProgram, Span, DEFAULT_DOMAIN};
pub use lower::{lower_to_lts, lower_with, LowerOptions, DEFAULT_INLINE_DEPTH};
pub use lts::{DistanceMap, GuardedCommand, LocId, LocKind, Location, Lts, MutId, Selector, Transition, Update, VarId, VarKind, Variable};
pub use parser::parse_program;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LangError {
    #[error("syntax error at {line}:{col}: expected {}, found {found}", expected.join(" or "))]
    Syntax { line: u32, col: u32, expected: Vec<String>, found: String },
    #[error("semantic error at {line}:{col}: {message}")]
    Semantic { line: u32, col: u32, message: String },
    #[error("inlining `{function}` exceeds the depth bound {bound}")]
    InliningDepthExceeded { function: String, bound: usize },
    #[error("lowering error: {0}")]
    Lowering(String),
    #[error("invalid transition system: {0}")]
    InvalidLts(String),
}

/// Parses and lowers in one step.
pub fn compile(src: &SourceProgram, opts: LowerOptions) -> Result<Lts, LangError> {
    lower_with(&parse_program(src)?, opts)
}

/// Parses and lowers inline text with default options.
pub fn compile_str(text: &str) -> Result<Lts, LangError> {
    compile(&SourceProgram::inline(text), LowerOptions::default())
}
