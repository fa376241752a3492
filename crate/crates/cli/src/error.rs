use std::fmt;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;
pub const EXIT_RESOURCE: i32 = 4;
/// A replayed run produced different bytes.
pub const EXIT_MISMATCH: i32 = 1;

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

    pub fn resource(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_RESOURCE,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<spinthermo::Error> for CliError {
    fn from(e: spinthermo::Error) -> Self {
        use spinthermo::ErrorKind;
        let code = match e.kind() {
            ErrorKind::Usage => EXIT_USAGE,
            ErrorKind::Domain => EXIT_DOMAIN,
            ErrorKind::Resource => EXIT_RESOURCE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        // a missing input is the caller's mistake, anything else is the machine's
        if e.kind() == std::io::ErrorKind::NotFound {
            Self::usage(e.to_string())
        } else {
            Self::resource(e.to_string())
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        if e.is_io_error() {
            Self::resource(e.to_string())
        } else {
            Self::usage(e.to_string())
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::usage(format!("manifest: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;
