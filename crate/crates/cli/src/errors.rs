//! CLI error taxonomy mapped onto process exit codes:
//! 2 = configuration, 3 = data, 4 = capacity.

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Data(String),
    Capacity(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Capacity(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Data(msg) => write!(f, "data error: {msg}"),
            CliError::Capacity(msg) => write!(f, "capacity error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<dp_dbscan::Error> for CliError {
    fn from(err: dp_dbscan::Error) -> Self {
        match err {
            dp_dbscan::Error::InvalidParameter(m) => CliError::Config(m),
            dp_dbscan::Error::OutOfDomain(m) => CliError::Data(m),
            dp_dbscan::Error::CapacityExceeded(m) => CliError::Capacity(m),
            dp_dbscan::Error::ResourceLimit(m) => CliError::Capacity(m),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Data(err.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(err: csv::Error) -> Self {
        CliError::Data(err.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(err: serde_json::Error) -> Self {
        CliError::Data(err.to_string())
    }
}
