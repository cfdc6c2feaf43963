//! A small declarative model-to-model transformation language.
//!
//! ```text
//! transformation ExtractTools from Tools to Tools
//! rule CopyTool { from t : Tool
//!   to tt : Tool ( name <- t.name ) }
//! ```
//!
//! Each source element is matched by at most one rule (type test plus
//! optional guard). A rule creates one set of targets per match, or one per
//! item of its `foreach` collection. Bindings that evaluate to source
//! elements are resolved to the primary target created for that element.

mod ast;
mod check;
mod eval;
mod exec;
mod lexer;
mod parser;

use alloc::string::String;
use alloc::vec::Vec;

pub use ast::*;
pub use check::check_transformation;
pub use eval::{evaluate, Env, EvalError, Evaluator, Value};
pub use exec::{execute, ExecError, ExecOptions, ExecOutcome, TraceMap};
pub use parser::{parse_expression, parse_transformation};

use crate::schema::MetamodelSchema;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at {line}:{column}: expected {}, found {found}", .expected.join(" or "))]
    Syntax {
        line: usize,
        column: usize,
        expected: Vec<String>,
        found: String,
    },
    #[error("{line}:{column}: unknown function `{name}`")]
    UnknownFunction { name: String, line: usize, column: usize },
    #[error("{line}:{column}: `{name}` takes {expected} argument(s), got {found}")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
        line: usize,
        column: usize,
    },
    #[error("{line}:{column}: unknown field `{name}` (expected id, name, type, source or target)")]
    UnknownField { name: String, line: usize, column: usize },
    #[error("{line}:{column}: illegal binding field `{field}`: {reason}")]
    IllegalBindingField {
        field: String,
        reason: String,
        line: usize,
        column: usize,
    },
    #[error("{line}:{column}: field `{field}` is bound twice")]
    DuplicateBinding { field: String, line: usize, column: usize },
    #[error("rule `{0}` is defined twice")]
    DuplicateRule(String),
    #[error("{line}:{column}: unbound variable `{name}`")]
    UnboundVariable { name: String, line: usize, column: usize },
    #[error("{line}:{column}: unknown type `{name}` in schema `{schema}`")]
    UnknownType {
        name: String,
        schema: String,
        line: usize,
        column: usize,
    },
    #[error("transformation declares {role} schema `{declared}` but `{given}` was supplied")]
    SchemaMismatch {
        role: &'static str,
        declared: String,
        given: String,
    },
    #[error("{line}:{column}: {message}")]
    Invalid { message: String, line: usize, column: usize },
}

/// Parses and checks against both schemas in one go.
pub fn parse_checked(
    text: &str,
    source: &MetamodelSchema,
    target: &MetamodelSchema,
) -> Result<TransformationAst, ParseError> {
    let ast = parse_transformation(text)?;
    check_transformation(&ast, source, target)?;
    Ok(ast)
}
