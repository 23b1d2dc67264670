use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, message: impl Into<String>) -> Self {
        Self { line, message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

/// A netlist problem. Checks collect these instead of stopping at the first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
}

impl Diagnostic {
    pub fn error(message: impl Into<String>) -> Self {
        Self { severity: Severity::Error, message: message.into() }
    }

    pub fn warning(message: impl Into<String>) -> Self {
        Self { severity: Severity::Warning, message: message.into() }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let level = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{level}: {}", self.message)
    }
}

/// Formats a diagnostic list one per line.
pub struct DiagnosticList<'a>(pub &'a [Diagnostic]);

impl fmt::Display for DiagnosticList<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("`{0}` applied outside its domain")]
    Domain(&'static str),
    #[error("first argument of `f-hist` must be a signal name")]
    NotAVariable,
    #[error("no recorded history for `{0}`")]
    NoHistory(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ElaborateError {
    #[error("module reference cycle: {}", .0.join(" -> "))]
    Cycle(Vec<String>),
    #[error("occurrence `{occurrence}` references undefined module `{module}`")]
    UndefinedModule { occurrence: String, module: String },
    #[error("occurrence `{occurrence}` passes {given} connections to module `{module}` which has {expected} externals")]
    ConnectionCount { occurrence: String, module: String, given: usize, expected: usize },
    #[error("top module `{0}` is not defined")]
    UnknownTop(String),
    #[error("netlist has no modules")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BuildError {
    #[error("occurrence `{occurrence}`: {what} is zero")]
    ZeroValue { occurrence: String, what: &'static str },
    #[error("signal name `{0}` is used for more than one unknown")]
    DuplicateUnknown(String),
    #[error("mutual inductance `{occurrence}` names `{name}`, which is not an inductor")]
    NotAnInductor { occurrence: String, name: String },
    #[error("occurrence `{occurrence}`: {message}")]
    Malformed { occurrence: String, message: String },
    #[error("term refers to `{0}`, which is not a recorded signal")]
    UnknownSignal(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error("matrix is singular: no usable pivot for column {column}")]
    Singular { column: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not square ({rows} rows, {cols} columns)")]
    NotSquare { rows: usize, cols: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("invalid simulation settings: {0}")]
    Config(String),
    #[error("at time {time}: {source}")]
    Eval { time: String, source: EvalError },
    #[error("at time {time}: matrix entry ({row}, {col}) could not be evaluated: {source}")]
    Entry { time: String, row: usize, col: usize, source: EvalError },
    #[error("at time {time}: {source}")]
    Solve { time: String, source: SolveError },
    #[error("unknown signal `{name}`; available: {}", .available.join(", "))]
    UnknownSignal { name: String, available: Vec<String> },
    #[error(transparent)]
    Build(#[from] BuildError),
}

#[derive(Debug, Error)]
pub enum StateError {
    #[error("state file version {found} is not supported (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("state file is truncated or malformed: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum OutputError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("malformed record file: {0}")]
    Malformed(String),
    #[error("print request `{request}`: {message}")]
    Print { request: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Pipeline error carrying the stage it came from.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(#[from] ParseError),
    #[error("netlist check failed:\n{}", DiagnosticList(.0))]
    Check(Vec<Diagnostic>),
    #[error("elaboration error: {0}")]
    Elaborate(#[from] ElaborateError),
    #[error("equation build error: {0}")]
    Build(#[from] BuildError),
    #[error("solver error: {0}")]
    Solve(#[from] SolveError),
    #[error("simulation error: {0}")]
    Engine(#[from] EngineError),
    #[error("state file error: {0}")]
    State(#[from] StateError),
    #[error("output error: {0}")]
    Output(#[from] OutputError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
