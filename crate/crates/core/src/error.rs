use thiserror::Error;

use crate::symbol::Tag;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SymbolError {
    #[error("tag {tag} does not take qubit value {bit:?}")]
    BadBit { tag: Tag, bit: Option<u8> },
    #[error("unknown site glyph `{0}`")]
    UnknownGlyph(String),
}

/// Structural problems in a rule set.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleSetError {
    #[error("symbol {0} declared twice")]
    DuplicateSymbol(Tag),
    #[error("undeclared symbol `{0}`")]
    UndeclaredSymbol(String),
    #[error("symbol {tag} declared with arity {declared}, expected {expected}")]
    ArityMismatch { tag: Tag, declared: u8, expected: u8 },
    #[error("rule `{rule}`: {side} side has {count} control symbols, expected exactly one")]
    ControlCount { rule: String, side: &'static str, count: usize },
    #[error("rule `{rule}`: {reason}")]
    BadAction { rule: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unknown tag `{0}`")]
    UnknownTag(String),
    #[error(transparent)]
    Invalid(#[from] RuleSetError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnumerationError {
    #[error("enumeration budget exceeded: {count} states > cap {cap}")]
    BudgetExceeded { count: u128, cap: usize },
    #[error("site count {0} outside supported range 1..={max}", max = crate::configspace::MAX_SITES)]
    BadSiteCount(usize),
}

/// Precondition failures of the bracketed/balanced/consistent predicates.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PredicateError {
    #[error("state is not bracketed")]
    NotBracketed,
    #[error("state is not well-formed")]
    NotWellFormed,
    #[error("state is not balanced")]
    NotBalanced,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransitionError {
    #[error("state `{state}` is not well-formed")]
    NotWellFormed { state: String },
    #[error("{count} {direction} rules apply to `{state}`")]
    NonDeterministic { state: String, direction: &'static str, count: usize },
    #[error("path through `{state}` exceeded {cap} steps")]
    CapExceeded { state: String, cap: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParamError {
    #[error("n = {0} must be odd and at least 5")]
    BadSegmentLength(usize),
    #[error("qubit string has length {got}, expected {expected}")]
    BadQubitString { got: usize, expected: usize },
    #[error("index {index} out of range 0..{bound}")]
    IndexOutOfRange { index: usize, bound: usize },
    #[error("number of segments must be at least 1")]
    NoSegments,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OperatorError {
    #[error("basis is not closed: `{0}` is missing")]
    BasisNotClosed(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("state `{0}` is not in the basis")]
    MissingState(String),
    #[error("term `{term}` is not defined on {topology} bases")]
    WrongTopology { term: &'static str, topology: &'static str },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("eigensolver did not converge after {iterations} iterations (best residual {best_residual:e})")]
    NoConvergence { iterations: usize, best_residual: f64 },
    #[error("requested {requested} eigenpairs from an operator of dimension {dim}")]
    TooMany { requested: usize, dim: usize },
    #[error("no clean zero cluster: eigenvalue #{index} = {value:e} lies within 10 x tol = {tol:e}")]
    MarginViolation { index: usize, value: f64, tol: f64 },
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegionError {
    #[error("region is empty")]
    Empty,
    #[error("region [{start}, {start}+{len}) does not fit in {sites} sites")]
    OutOfRange { start: usize, len: usize, sites: usize },
}

/// Crate-level error for operations that cross module boundaries.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Symbol(#[from] SymbolError),
    #[error(transparent)]
    RuleSet(#[from] RuleSetError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Enumeration(#[from] EnumerationError),
    #[error(transparent)]
    Predicate(#[from] PredicateError),
    #[error(transparent)]
    Transition(#[from] TransitionError),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Region(#[from] RegionError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
