use thiserror::Error;

/// Errors raised by the library. Mathematical failures (a domination that
/// does not hold) are reported through verdict types, not through this enum.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),

    #[error("conditioning on an event of probability zero")]
    NullConditioning,

    #[error("size limit exceeded: {what} needs {needed}, limit is {limit}")]
    Size {
        what: &'static str,
        needed: u128,
        limit: u128,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("assumption {name} fails: {witness}")]
    Assumption { name: &'static str, witness: String },

    #[error("no lift at step {step}: {detail}")]
    Lift { step: usize, detail: String },

    #[error("fixture regression: {0}")]
    Fixture(String),

    #[error("internal invariant broken: {0}")]
    Internal(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}
