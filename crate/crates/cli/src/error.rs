use std::fmt;

/// An error together with the process exit status it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NO_STEADY_STATE: i32 = 3;
pub const EXIT_NOT_FOUND: i32 = 4;
pub const EXIT_IO: i32 = 1;

impl CliError {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(EXIT_CONFIG, message)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<emsq::Error> for CliError {
    fn from(err: emsq::Error) -> Self {
        let code = match err {
            emsq::Error::NoSteadyState { .. } | emsq::Error::Divergent { .. } => {
                EXIT_NO_STEADY_STATE
            }
            emsq::Error::FleetNotFound { .. } => EXIT_NOT_FOUND,
            _ => EXIT_CONFIG,
        };
        Self::new(code, err.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        Self::new(EXIT_IO, err.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(err: serde_json::Error) -> Self {
        Self::new(EXIT_IO, err.to_string())
    }
}
