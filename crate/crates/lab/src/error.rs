use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("numerical failure in {context}: {source}")]
    Numerical {
        context: String,
        #[source]
        source: chiral_core::Error,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl LabError {
    /// Process exit status: 2 for configuration problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) => 2,
            LabError::Numerical { .. } => 3,
            LabError::Io { .. } => 1,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        LabError::Config(msg.into())
    }
}

/// Attaches a module context to core errors.
pub trait Context<T> {
    fn context(self, what: &str) -> Result<T, LabError>;
}

impl<T> Context<T> for chiral_core::Result<T> {
    fn context(self, what: &str) -> Result<T, LabError> {
        self.map_err(|source| LabError::Numerical { context: what.to_string(), source })
    }
}
