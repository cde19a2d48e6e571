use std::fmt;

use serde::{Deserialize, Serialize};

/// Position in a source document, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Location {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}", self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompileErrorKind {
    Lex,
    Syntax,
    RaggedTable,
    DuplicateDeclaration,
    UnresolvedSymbol,
    ArityMismatch,
    BoundViolation,
    NonlinearExpression,
    ObjectivePolicy,
}

impl CompileErrorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CompileErrorKind::Lex => "lex",
            CompileErrorKind::Syntax => "syntax",
            CompileErrorKind::RaggedTable => "ragged-table",
            CompileErrorKind::DuplicateDeclaration => "duplicate-declaration",
            CompileErrorKind::UnresolvedSymbol => "unresolved-symbol",
            CompileErrorKind::ArityMismatch => "arity-mismatch",
            CompileErrorKind::BoundViolation => "bound-violation",
            CompileErrorKind::NonlinearExpression => "nonlinear-expression",
            CompileErrorKind::ObjectivePolicy => "objective-policy",
        }
    }
}

impl fmt::Display for CompileErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A failure to turn model/data text into a solvable instance.
///
/// The rendered message is fed back verbatim to the LLM during refinement, so
/// every error names either a source location or the offending symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, thiserror::Error)]
pub struct CompileError {
    pub kind: CompileErrorKind,
    pub location: Option<Location>,
    pub symbol: Option<String>,
    pub message: String,
}

impl CompileError {
    pub fn at(kind: CompileErrorKind, location: Location, message: impl Into<String>) -> Self {
        CompileError {
            kind,
            location: Some(location),
            symbol: None,
            message: message.into(),
        }
    }

    pub fn symbol(kind: CompileErrorKind, symbol: impl Into<String>, message: impl Into<String>) -> Self {
        CompileError {
            kind,
            location: None,
            symbol: Some(symbol.into()),
            message: message.into(),
        }
    }
}

impl fmt::Display for CompileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} error", self.kind)?;
        if let Some(loc) = self.location {
            write!(f, " at {loc}")?;
        }
        if let Some(sym) = &self.symbol {
            write!(f, " in '{sym}'")?;
        }
        write!(f, ": {}", self.message)
    }
}
