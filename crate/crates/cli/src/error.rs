use std::fmt;

/// Exit status for a successful run.
pub const EXIT_OK: i32 = 0;
/// Bad configuration, flags or input files.
pub const EXIT_CONFIG: i32 = 2;
/// Failure while running or writing results.
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    /// `key` is the dotted path of the offending setting.
    Config { key: String, message: String },
    Runtime(String),
}

impl CliError {
    pub fn config(key: &str, message: impl Into<String>) -> Self {
        CliError::Config {
            key: key.to_string(),
            message: message.into(),
        }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        CliError::Runtime(message.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => EXIT_CONFIG,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }

    /// Maps a library error raised while running `section`. Parameter and
    /// topology problems are configuration errors.
    pub fn from_core(section: &str, e: ctlab::Error) -> Self {
        match &e {
            ctlab::Error::InvalidParameter { name, reason } => {
                let key = if name.contains('.') || *name == "trials" {
                    name.to_string()
                } else {
                    format!("{section}.{name}")
                };
                CliError::config(&key, reason.clone())
            }
            ctlab::Error::Topology(_) | ctlab::Error::Parse { .. } => CliError::config("topology", e.to_string()),
            ctlab::Error::Oversampling(_) => CliError::config("modem.oversampling", e.to_string()),
            ctlab::Error::TimingOffset { .. } => CliError::config(&format!("{section}.timing_offset_s"), e.to_string()),
            ctlab::Error::NonPositivePower(_) => CliError::config(&format!("{section}.delta_p_db"), e.to_string()),
            _ => CliError::runtime(e.to_string()),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config { key, message } => write!(f, "config error at `{key}`: {message}"),
            CliError::Runtime(m) => write!(f, "runtime error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}
