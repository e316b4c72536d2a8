use std::fmt;

use iet_spectral::Error;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn numeric(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_NUMERIC,
            message: message.into(),
        }
    }

    pub fn usage_from(e: Error) -> Self {
        Self::usage(e.to_string())
    }
}

/// Bad input is a usage error; anything the numerics reject is a numeric
/// failure.
impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Window { .. } | Error::Precondition(_) => Self::numeric(e.to_string()),
            _ => Self::usage(e.to_string()),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}
