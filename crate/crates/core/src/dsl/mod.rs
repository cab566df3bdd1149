//! The textual constraint language.
//!
//! ```text
//! constraint C6 {
//!     text 'Before any invasive operation, patient must be examined';
//!     context process 'Invasive Surgery' all;
//!     on exists s is 'conduct surgery';
//!     require exists e is 'examine patient' and e eventually-precedes s;
//! }
//! ```
//!
//! A document holds any number of `constraint`, `meta` and `rule` items.
//! Clause terminators (`;`) are optional when the next clause keyword follows.

mod lexer;
mod parser;
mod printer;

use thiserror::Error;

use crate::base::MetaConstraint;
use crate::constraint::ProcessConstraint;
use crate::expr::DataExpr;
use crate::identify::OpaqueRule;

pub use lexer::Pos;
pub use printer::{serialize_constraint, serialize_items, serialize_meta, serialize_rule};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DslError {
    #[error("syntax error at {pos}: {message}")]
    Syntax { pos: Pos, message: String },
    #[error("bind error at {pos}: {message}")]
    Bind { pos: Pos, message: String },
    #[error("invalid constraint at {pos}: {message}")]
    Invalid { pos: Pos, message: String },
}

impl DslError {
    pub(crate) fn syntax(pos: Pos, message: impl Into<String>) -> Self {
        DslError::Syntax {
            pos,
            message: message.into(),
        }
    }

    pub(crate) fn bind(pos: Pos, message: impl Into<String>) -> Self {
        DslError::Bind {
            pos,
            message: message.into(),
        }
    }

    pub(crate) fn invalid(pos: Pos, message: impl Into<String>) -> Self {
        DslError::Invalid {
            pos,
            message: message.into(),
        }
    }

    pub fn position(&self) -> Option<Pos> {
        match self {
            DslError::Syntax { pos, .. } | DslError::Bind { pos, .. } | DslError::Invalid { pos, .. } => {
                Some(*pos)
            }
        }
    }
}

/// One top-level item of a constraint document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Item {
    Constraint(ProcessConstraint),
    Meta(MetaConstraint),
    Rule(OpaqueRule),
}

impl Item {
    pub fn id(&self) -> &str {
        match self {
            Item::Constraint(c) => &c.id,
            Item::Meta(m) => &m.id,
            Item::Rule(r) => &r.id,
        }
    }
}

pub fn parse_document(text: &str) -> Result<Vec<Item>, DslError> {
    parser::Parser::new(text)?.document()
}

/// Parses a document that must contain exactly one `constraint` item.
pub fn parse_constraint(text: &str) -> Result<ProcessConstraint, DslError> {
    let mut items = parse_document(text)?;
    match (items.len(), items.pop()) {
        (1, Some(Item::Constraint(c))) => Ok(c),
        (n, _) => Err(DslError::syntax(
            Pos { line: 1, column: 1 },
            format!("expected exactly one constraint, found {n} item(s)"),
        )),
    }
}

/// Parses a schema guard: a data expression over bare data-element names.
pub fn parse_guard(text: &str) -> Result<DataExpr, DslError> {
    parser::Parser::new(text)?.standalone_guard()
}
