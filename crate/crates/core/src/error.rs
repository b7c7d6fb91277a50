use std::fmt;

use thiserror::Error;

/// A position in policy or schema source text, 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at {span}: {message}")]
    Parse { span: Span, message: String },

    #[error("log line {line}: {message}")]
    Log { line: usize, message: String },

    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),

    #[error("predicate `{pred}` expects {expected} arguments, found {found}")]
    Arity { pred: String, expected: usize, found: usize },

    #[error("invalid declaration: {0}")]
    Declaration(String),

    #[error("subjective atom `{0}` used in a quantifier guard")]
    SubjectiveGuard(String),

    #[error("undefined mode for `{atom}`: {reason}")]
    UndefinedMode { atom: String, reason: String },

    #[error("atom `{0}` is not ground")]
    NotGround(String),

    #[error("atom `{0}` is not subjective")]
    NotSubjective(String),

    #[error("conflicting atoms: {}", .0.join(", "))]
    Conflict(Vec<String>),

    #[error("`{atom}` is already decided as {existing}")]
    Contradiction { atom: String, existing: String },

    #[error("completeness claim does not hold: {0}")]
    Completeness(String),

    #[error("hypothesis not met: {0}")]
    Hypothesis(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
