use std::fmt;

/// Command failure with its process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad arguments, unreadable input or unwritable output (exit 1).
    Usage(String),
    /// The algorithm itself failed: sampler exhaustion, divergent training (exit 2).
    Algorithm(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 1,
            Self::Algorithm(_) => 2,
        }
    }

    pub fn usage(e: impl fmt::Display) -> Self {
        Self::Usage(e.to_string())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Usage(m) | Self::Algorithm(m) => f.write_str(m),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Usage(e.to_string())
    }
}

impl From<kmotion::sampler::SamplerError> for CliError {
    fn from(e: kmotion::sampler::SamplerError) -> Self {
        use kmotion::sampler::SamplerError;
        match e {
            SamplerError::Exhausted { .. } => Self::Algorithm(e.to_string()),
            _ => Self::Usage(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
