use thiserror::Error;

/// Error type shared by all modules. The CLI maps variants onto exit codes.
#[derive(Debug, Error)]
pub enum Error {
    /// Precondition or regime violation (bad argument, density outside the
    /// dilute regime, table lookup out of range).
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid or inconsistent configuration.
    #[error("config error: {0}")]
    Config(String),

    /// Resource cap exceeded (occupation tensor size, shell enumeration).
    #[error("capacity error: {0}")]
    Capacity(String),

    /// A numerical procedure failed to reach its tolerance.
    #[error("numeric error: {what} (achieved {achieved:e}, wanted {wanted:e})")]
    Numeric {
        what: String,
        achieved: f64,
        wanted: f64,
    },

    /// A cross-check between two independent routes failed.
    #[error("verification failure: {0}")]
    Verification(String),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn numeric(what: impl Into<String>, achieved: f64, wanted: f64) -> Self {
        Error::Numeric {
            what: what.into(),
            achieved,
            wanted,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
