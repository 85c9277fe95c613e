use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    /// A caller-supplied value violates an operation's precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An exhaustive computation was requested above its default size guard.
    #[error("{what} is guarded to n <= {limit} (got n = {n}); pass --force to lift the guard")]
    GuardExceeded {
        what: &'static str,
        n: usize,
        limit: usize,
    },

    /// Two routes that must agree exactly did not.
    #[error("internal consistency failure: {0}")]
    Consistency(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid_argument",
            Error::GuardExceeded { .. } => "guard_exceeded",
            Error::Consistency(_) => "consistency",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Checks `n <= limit` unless `force` is set.
pub(crate) fn guard(what: &'static str, n: usize, limit: usize, force: bool) -> Result<()> {
    if n > limit && !force {
        return Err(Error::GuardExceeded { what, n, limit });
    }
    Ok(())
}
