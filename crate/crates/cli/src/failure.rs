use std::fmt;

use topocomp::Error;

pub const EXIT_INPUT: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_FORMAT: i32 = 4;

/// A message plus the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io(_)
            | Error::Parse { .. }
            | Error::Validation(_)
            | Error::DatasetTooSmall { .. }
            | Error::Json(_) => EXIT_INPUT,
            Error::Format(_) => EXIT_FORMAT,
            Error::Dimension { .. }
            | Error::Contract(_)
            | Error::MissingParam(_)
            | Error::Parameter(_)
            | Error::EmptyEdgeSet
            | Error::Compatibility(_)
            | Error::Divergence { .. } => EXIT_CONFIG,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}
