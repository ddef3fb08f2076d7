use thiserror::Error;

/// Errors raised by the analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),

    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("virtual value undefined at {at}: {reason}")]
    UndefinedVirtualValue { at: f64, reason: String },

    #[error("distribution is not regular: phi({lo}) = {phi_lo} exceeds phi({hi}) = {phi_hi}")]
    NotRegular {
        lo: f64,
        hi: f64,
        phi_lo: f64,
        phi_hi: f64,
    },

    #[error("monopoly reserve is ambiguous: {0}")]
    AmbiguousReserve(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("numeric error: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}
