//! Front end for the algebraic modeling subset: model and data documents,
//! semantic validation, and grounding into a [`ProblemInstance`].
//!
//! Supported model statements: `set`, `param` (scalar, 1-D, 2-D, with
//! `>=`/`<=` bounds), `var` (scalar or 1-D, bounds, `integer`/`binary`),
//! `subject to` (scalar or 1-D indexed), `maximize`/`minimize`, `sum {i in S}`
//! binders, and `#` comments. Data documents give set members and param
//! values as scalars, key/value lists, or 2-D header tables.
//!
//! [`ProblemInstance`]: crate::instance::ProblemInstance

pub mod ast;
pub mod data;
mod error;
mod instantiate;
mod lexer;
mod parser;
mod render;
mod validate;

pub use ast::Model;
pub use data::{parse_data, DataSection, ParamValue, Table2};
pub use error::{CompileError, CompileErrorKind, Location};
pub use instantiate::{instantiate, ObjectivePolicy};
pub use lexer::is_identifier;
pub use parser::parse_model;
pub use render::{render_expr, render_model};
pub use validate::{check_model, validate, ValidationReport};

pub(crate) use render::{number as render_number, quote_member};
