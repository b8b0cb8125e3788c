//! Delegation constraints: surface syntax, evaluation and satisfiability.

mod ast;
mod date;
mod eval;
mod parser;
mod universe;

pub use ast::{conjoin, is_identifier, is_keyword, print_constraint, split_level, Constraint, KEYWORDS};
pub use date::{Date, Interval};
pub use eval::{eval_constraint, eval_optional, EvalContext};
pub use parser::{parse_constraint, parse_constraint_with};
pub use universe::{ContextUniverse, DEFAULT_MAX_CONTEXTS};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConstraintError {
    #[error("syntax error at offset {position}: expected {}, found {found}", expected.join(" or "))]
    Syntax {
        position: usize,
        expected: Vec<String>,
        found: String,
    },
    #[error("invalid date `{text}`")]
    InvalidDate { text: String },
    #[error("interval bounds out of order: {begin} is after {end}")]
    IntervalOrder { begin: Date, end: Date },
    #[error("unknown interval name `{name}`")]
    UnknownInterval { name: String },
    #[error("invalid identifier `{text}`")]
    InvalidIdentifier { text: String },
    #[error("MULTI-LEVEL DELEGATION is only allowed as a top-level conjunct")]
    LevelPlacement,
    #[error("context universe too large: {} contexts exceeds limit {limit}", contexts.map_or("too many".to_string(), |n| n.to_string()))]
    UniverseTooLarge { contexts: Option<u64>, limit: u64 },
    #[error("duplicate interval name `{name}`")]
    DuplicateInterval { name: String },
}
