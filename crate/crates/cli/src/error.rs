use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, keys, values or input files. Exit code 2.
    #[error("configuration error: {0}")]
    Config(String),
    /// Failure during optimization or output. Exit code 3.
    #[error("runtime failure: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl From<lowthrust_mga::Error> for CliError {
    fn from(e: lowthrust_mga::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}
