use thiserror::Error;

/// Errors raised by the library. The CLI maps `Resource` to exit code 3 and
/// everything else to exit code 2.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),

    #[error("resource cap `{cap}` exceeded: need {needed}, limit is {limit}")]
    Resource {
        cap: &'static str,
        needed: u128,
        limit: u128,
    },

    #[error("logic error: {0}")]
    Logic(String),

    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn logic(msg: impl Into<String>) -> Self {
        Error::Logic(msg.into())
    }

    pub fn is_resource(&self) -> bool {
        matches!(self, Error::Resource { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
