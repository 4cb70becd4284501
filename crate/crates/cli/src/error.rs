use conformal_core::ErrorClass;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("row {row}, column {column:?}: cannot parse {value:?} as a number")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },
    #[error("{0}")]
    Csv(String),
    #[error("column {0:?} not found in header")]
    MissingColumn(String),
    #[error("at {path}: {msg}")]
    Schema { path: String, msg: String },
    #[error("{0}")]
    UnsupportedResult(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{}{source}", fold.map(|f| format!("fold {f}: ")).unwrap_or_default())]
    Core {
        fold: Option<usize>,
        #[source]
        source: conformal_core::Error,
    },
}

impl From<conformal_core::Error> for CliError {
    fn from(source: conformal_core::Error) -> Self {
        CliError::Core { fold: None, source }
    }
}

impl CliError {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }

    pub fn in_fold(self, fold: usize) -> Self {
        match self {
            CliError::Core { source, .. } => CliError::Core {
                fold: Some(fold),
                source,
            },
            other => other,
        }
    }

    /// Machine-readable prefix printed before the message.
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "Usage",
            CliError::Parse { .. } => "ParseError",
            CliError::Csv(_) => "ParseError",
            CliError::MissingColumn(_) => "MissingColumn",
            CliError::Schema { .. } => "SchemaError",
            CliError::UnsupportedResult(_) => "UnsupportedResult",
            CliError::Io { .. } => "Io",
            CliError::Core { source, .. } => source.code(),
        }
    }

    /// 2 usage, 3 data, 4 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::UnsupportedResult(_) => 2,
            CliError::Core { source, .. } => match source.class() {
                ErrorClass::Usage => 2,
                ErrorClass::Data => 3,
                ErrorClass::Numeric => 4,
            },
            _ => 3,
        }
    }
}
