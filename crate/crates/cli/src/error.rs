use serde::Serialize;

/// Failure of a CLI run, classified by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{message}")]
    Usage { field: Option<String>, message: String },

    #[error(transparent)]
    Core(#[from] nstorus::Error),
}

/// The JSON object written to standard error on failure.
#[derive(Debug, Serialize)]
pub struct ErrorReport {
    pub kind: &'static str,
    pub field: Option<String>,
    pub message: String,
    pub exit_code: i32,
}

impl CliError {
    pub fn usage(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Usage {
            field: Some(field.into()),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        use nstorus::Error as E;
        match self {
            CliError::Usage { .. } => 2,
            CliError::Core(e) => match e {
                E::Diverged { .. }
                | E::GridTooCoarse(_)
                | E::TooFewModes { .. }
                | E::Degenerate(_)
                | E::InsufficientHistory { .. } => 1,
                _ => 2,
            },
        }
    }

    pub fn report(&self) -> ErrorReport {
        use nstorus::Error as E;
        let (kind, field) = match self {
            CliError::Usage { field, .. } => ("usage", field.clone()),
            CliError::Core(e) => match e {
                E::Config { field, .. } => ("config", Some(format!("config.{field}"))),
                E::Diverged { .. } => ("diverged", None),
                E::Io(_) => ("io", None),
                E::Json(_) | E::Format(_) => ("format", None),
                E::InvalidArgument(_) | E::Shape(_) | E::NonZeroMean { .. } | E::NotSolenoidal { .. } => {
                    ("invalid", None)
                }
                _ => ("numerical", None),
            },
        };
        ErrorReport {
            kind,
            field,
            message: self.to_string(),
            exit_code: self.exit_code(),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
