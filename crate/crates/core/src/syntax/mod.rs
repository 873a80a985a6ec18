//! The `.anp` text format: lexer, parser, resolution and serializer.

mod document;
mod lexer;
mod parser;
mod printer;

use thiserror::Error;

pub use document::{
    parse_proof, parse_spec, EventDecl, FlowDecl, ProcedureDecl, ProcessDecl, RunDecl, SpecDocument, StrandDecl,
};
pub use lexer::Span;
pub use parser::{parse_formula, parse_term};
pub use printer::serialize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecError {
    #[error("{span}: syntax error: {msg}")]
    Syntax { span: Span, msg: String },
    #[error("{span}: unresolved reference: {msg}")]
    Unresolved { span: Span, msg: String },
    #[error("{span}: duplicate name `{name}`")]
    DuplicateName { span: Span, name: String },
    #[error("{span}: unknown axiom `{name}`")]
    UnknownAxiomName { span: Span, name: String },
    #[error("{span}: {msg}")]
    Invalid { span: Span, msg: String },
}

impl SpecError {
    pub fn span(&self) -> Span {
        match self {
            SpecError::Syntax { span, .. }
            | SpecError::Unresolved { span, .. }
            | SpecError::DuplicateName { span, .. }
            | SpecError::UnknownAxiomName { span, .. }
            | SpecError::Invalid { span, .. } => *span,
        }
    }

    pub fn is_syntax(&self) -> bool {
        matches!(self, SpecError::Syntax { .. })
    }
}
