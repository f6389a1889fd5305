use crate::model::MonthKey;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid trace: {0}")]
    InvalidTrace(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{source_name}:{line}: {message}")]
    MalformedLine {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("invalid month key `{0}`")]
    MonthKey(String),

    #[error("empty month range: {first} is after {last}")]
    MonthRange { first: MonthKey, last: MonthKey },

    #[error("unknown category `{0}`")]
    UnknownCategory(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("need at least 2 distinct degrees to fit, found {found}")]
    InsufficientPoints { found: usize },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("duplicate month {0} in series")]
    DuplicateMonth(MonthKey),

    #[error("{metric} at {month} is not an outlier at threshold {threshold}")]
    NotFlagged {
        metric: String,
        month: MonthKey,
        threshold: f64,
    },

    #[error("attribution error: {0}")]
    Attribution(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("oracle refuses instance with {size} nodes (limit {limit})")]
    OracleTooLarge { size: usize, limit: usize },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Stable machine-readable code printed by the CLI before the message.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidTrace(_) => "E_TRACE",
            Error::Parse(_) | Error::MalformedLine { .. } => "E_PARSE",
            Error::MonthKey(_) | Error::MonthRange { .. } => "E_MONTH",
            Error::UnknownCategory(_) => "E_CATEGORY",
            Error::Contract(_) => "E_CONTRACT",
            Error::InsufficientPoints { .. } => "E_FIT",
            Error::NotApplicable(_) => "E_NOT_APPLICABLE",
            Error::DuplicateMonth(_) => "E_SERIES",
            Error::NotFlagged { .. } | Error::Attribution(_) => "E_OUTLIER",
            Error::Data(_) => "E_DATA",
            Error::Parameter(_) => "E_PARAM",
            Error::OracleTooLarge { .. } => "E_ORACLE",
            Error::Io { .. } => "E_IO",
            Error::Csv(_) => "E_CSV",
            Error::Json(_) => "E_JSON",
        }
    }

    /// True for errors caused by bad input files or arguments rather than by
    /// the analysis itself.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidTrace(_)
                | Error::Parse(_)
                | Error::MalformedLine { .. }
                | Error::MonthKey(_)
                | Error::MonthRange { .. }
                | Error::UnknownCategory(_)
                | Error::Parameter(_)
                | Error::Io { .. }
                | Error::Csv(_)
                | Error::Json(_)
        )
    }
}
