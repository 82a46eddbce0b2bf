//! Engine error type.
//!
//! Every failure carries a stable [`ErrorCode`]. Codes are grouped into
//! categories so the command-line driver can map them onto exit codes.

use std::fmt;

/// 1-based line/column position in query text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Pos {
    pub line: u32,
    pub column: u32,
}

impl Pos {
    pub fn new(line: u32, column: u32) -> Self {
        Pos { line, column }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

/// Coarse grouping of error codes, one per exit code family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Parse,
    Resolve,
    Dynamic,
    Io,
    Cap,
}

macro_rules! error_codes {
    ($($variant:ident => ($name:literal, $cat:ident)),* $(,)?) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
        pub enum ErrorCode {
            $($variant),*
        }

        impl ErrorCode {
            pub const ALL: &'static [ErrorCode] = &[$(ErrorCode::$variant),*];

            pub fn as_str(self) -> &'static str {
                match self {
                    $(ErrorCode::$variant => $name),*
                }
            }

            pub fn category(self) -> ErrorCategory {
                match self {
                    $(ErrorCode::$variant => ErrorCategory::$cat),*
                }
            }
        }
    };
}

error_codes! {
    // lexing and parsing
    LexError => ("LEX_ERROR", Parse),
    ParseError => ("PARSE_ERROR", Parse),
    DuplicateFunction => ("DUPLICATE_FUNCTION", Parse),
    DuplicateParam => ("DUPLICATE_PARAM", Parse),
    // name resolution
    UnknownFunction => ("UNKNOWN_FUNCTION", Resolve),
    UndefinedVariable => ("UNDEFINED_VARIABLE", Resolve),
    // data model
    SerializeFunction => ("SERIALIZE_FUNCTION", Dynamic),
    EbvError => ("EBV_ERROR", Dynamic),
    NoCastRule => ("NO_CAST_RULE", Dynamic),
    RangeError => ("RANGE_ERROR", Dynamic),
    LexicalError => ("LEXICAL_ERROR", Dynamic),
    DuplicateKey => ("DUPLICATE_KEY", Dynamic),
    JsonError => ("JSON_ERROR", Dynamic),
    // schema and frames
    UnknownTypeName => ("UNKNOWN_TYPE_NAME", Dynamic),
    MalformedSchema => ("MALFORMED_SCHEMA", Dynamic),
    ValidationError => ("VALIDATION_ERROR", Dynamic),
    NonObjectRow => ("NON_OBJECT_ROW", Dynamic),
    SchemaMismatch => ("SCHEMA_MISMATCH", Dynamic),
    DuplicateColumn => ("DUPLICATE_COLUMN", Dynamic),
    UnknownColumn => ("UNKNOWN_COLUMN", Dynamic),
    // evaluation
    TypeError => ("TYPE_ERROR", Dynamic),
    DivisionByZero => ("DIVISION_BY_ZERO", Dynamic),
    NotAFunction => ("NOT_A_FUNCTION", Dynamic),
    ArityMismatch => ("ARITY_MISMATCH", Dynamic),
    ModeAssumptionViolated => ("MODE_ASSUMPTION_VIOLATED", Dynamic),
    DuplicateKeyInMerge => ("DUPLICATE_KEY_IN_MERGE", Dynamic),
    // machine learning
    UnknownTransformer => ("UNKNOWN_TRANSFORMER", Dynamic),
    UnknownEstimator => ("UNKNOWN_ESTIMATOR", Dynamic),
    UnknownParam => ("UNKNOWN_PARAM", Dynamic),
    ParamTypeError => ("PARAM_TYPE_ERROR", Dynamic),
    MissingParam => ("MISSING_PARAM", Dynamic),
    NotAFrame => ("NOT_A_FRAME", Dynamic),
    NonNumericInput => ("NON_NUMERIC_INPUT", Dynamic),
    RaggedVectors => ("RAGGED_VECTORS", Dynamic),
    EmptyTrainingSet => ("EMPTY_TRAINING_SET", Dynamic),
    BadLabel => ("BAD_LABEL", Dynamic),
    NegativeFeature => ("NEGATIVE_FEATURE", Dynamic),
    StageTypeError => ("STAGE_TYPE_ERROR", Dynamic),
    UnknownModelKind => ("UNKNOWN_MODEL_KIND", Dynamic),
    // environment
    IoError => ("IO_ERROR", Io),
    MaterializationCapExceeded => ("MATERIALIZATION_CAP_EXCEEDED", Cap),
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Error {
    pub code: ErrorCode,
    pub message: String,
    pub pos: Option<Pos>,
}

impl Error {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        Error {
            code,
            message: message.into(),
            pos: None,
        }
    }

    pub fn at(code: ErrorCode, pos: Pos, message: impl Into<String>) -> Self {
        Error {
            code,
            message: message.into(),
            pos: Some(pos),
        }
    }

    /// Attaches a position unless one is already present.
    pub fn with_pos(mut self, pos: Pos) -> Self {
        if self.pos.is_none() {
            self.pos = Some(pos);
        }
        self
    }

    pub fn category(&self) -> ErrorCategory {
        self.code.category()
    }

    pub fn io(what: impl fmt::Display, err: std::io::Error) -> Self {
        Error::new(ErrorCode::IoError, format!("{what}: {err}"))
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.pos {
            Some(pos) => write!(f, "{} at {}: {}", self.code, pos, self.message),
            None => write!(f, "{}: {}", self.code, self.message),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T, E = Error> = std::result::Result<T, E>;

macro_rules! bail {
    ($code:ident, $($arg:tt)*) => {
        return Err($crate::error::Error::new($crate::error::ErrorCode::$code, format!($($arg)*)))
    };
}
pub(crate) use bail;

macro_rules! err {
    ($code:ident, $($arg:tt)*) => {
        $crate::error::Error::new($crate::error::ErrorCode::$code, format!($($arg)*))
    };
}
pub(crate) use err;
