use std::fmt;

use thiserror::Error;

/// A single violated configuration invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigViolation {
    pub field: &'static str,
    pub message: String,
}

impl fmt::Display for ConfigViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Every invariant a configuration broke, collected in one pass.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConfigErrors(pub Vec<ConfigViolation>);

impl ConfigErrors {
    pub fn push(&mut self, field: &'static str, message: impl Into<String>) {
        self.0.push(ConfigViolation { field, message: message.into() });
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ConfigViolation> {
        self.0.iter()
    }

    /// True if some violation mentions `field`.
    pub fn has(&self, field: &str) -> bool {
        self.0.iter().any(|v| v.field == field)
    }
}

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

#[derive(Debug, Error)]
pub enum NcmsError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(#[from] ConfigErrors),

    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("non-identifiable hypotheses: received energy variance is the same with and without Alice's bit")]
    NonIdentifiable,

    #[error("relay decisions are required to synthesize the helper (CB) band")]
    MissingRelayDecisions,

    #[error("frame holds {got} samples, expected {expected}")]
    FrameLength { expected: usize, got: usize },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("unknown experiment or table `{0}`")]
    UnknownExperiment(String),

    #[error("config file parse error: {0}")]
    ConfigParse(#[from] toml::de::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl NcmsError {
    pub(crate) fn arg(name: &'static str, reason: impl Into<String>) -> Self {
        NcmsError::InvalidArgument { name, reason: reason.into() }
    }
}

pub type Result<T, E = NcmsError> = std::result::Result<T, E>;
