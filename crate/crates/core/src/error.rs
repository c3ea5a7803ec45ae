use thiserror::Error;

/// Errors raised while reading taxonomy, schema, sequence or pattern text.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("line {line}: {msg}")]
    Line { line: usize, msg: String },
    #[error("{0}")]
    General(String),
}

impl ParseError {
    pub fn at(line: usize, msg: impl Into<String>) -> Self {
        ParseError::Line {
            line,
            msg: msg.into(),
        }
    }

    pub fn general(msg: impl Into<String>) -> Self {
        ParseError::General(msg.into())
    }

    /// Attach a line number to an error that has none yet.
    pub fn with_line(self, line: usize) -> Self {
        match self {
            ParseError::General(msg) => ParseError::Line { line, msg },
            other => other,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TaxonomyError {
    #[error("unknown concept {0:?}")]
    UnknownConcept(String),
    #[error("concept id {0} out of range")]
    BadConceptId(u32),
    #[error("concept array length mismatch: {left} vs {right} (schema has {schema})")]
    LengthMismatch {
        left: usize,
        right: usize,
        schema: usize,
    },
    #[error("concept at position {0} belongs to a different taxonomy than the schema")]
    TaxonomyMismatch(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("event ordinal {0} out of range (sequence has {1} events)")]
    EventOutOfRange(usize, usize),
    #[error("index vector is not strictly increasing")]
    NotIncreasing,
    #[error("pattern does not fit the schema: {0}")]
    SchemaMismatch(String),
    #[error("missing relationship entry for events ({0}, {1})")]
    MissingRelationship(usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RefineError {
    #[error("slot {slot} holds incomparable concepts {a} and {b}")]
    IncomparableConcepts { slot: usize, a: String, b: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("infeasible plant: {0}")]
    Infeasible(String),
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("minimum support must be at least 1 (got {0})")]
    ThresholdTooSmall(u64),
    #[error("invalid minimum support {0:?}")]
    BadMinSupport(String),
    #[error("{0} must be at least 1")]
    CapTooSmall(&'static str),
}
