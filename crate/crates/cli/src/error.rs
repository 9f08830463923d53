use std::path::PathBuf;

use thiserror::Error;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;
pub const EXIT_IO: i32 = 5;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}", config_message(.field.as_deref(), *.line, .message))]
    Config {
        field: Option<String>,
        line: Option<usize>,
        message: String,
    },
    #[error("{stage} failed: {source}")]
    Numeric {
        stage: &'static str,
        #[source]
        source: eprsim::Error,
    },
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn config_message(field: Option<&str>, line: Option<usize>, message: &str) -> String {
    let mut s = String::from("config");
    if let Some(l) = line {
        s.push_str(&format!(" line {l}"));
    }
    if let Some(f) = field {
        s.push_str(&format!(" ({f})"));
    }
    format!("{s}: {message}")
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => EXIT_CONFIG,
            CliError::Numeric { .. } => EXIT_NUMERIC,
            CliError::Io { .. } => EXIT_IO,
        }
    }

    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            field: Some(field.into()),
            line: None,
            message: message.into(),
        }
    }

    /// Tags a core error with the pipeline stage it came from. I/O errors
    /// keep their own exit code.
    pub fn stage(stage: &'static str) -> impl FnOnce(eprsim::Error) -> CliError {
        move |e| match e {
            eprsim::Error::Io(source) => CliError::Io {
                path: PathBuf::from(stage),
                source,
            },
            source => CliError::Numeric { stage, source },
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
