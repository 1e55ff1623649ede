use thiserror::Error;

/// Why an expansion stopped before its step budget ran out.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Halt {
    /// The two critical bands have equal width.
    EqualWidths,
    /// The same band occupies both critical positions.
    SameBand,
}

impl std::fmt::Display for Halt {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Halt::EqualWidths => f.write_str("critical bands have equal width"),
            Halt::SameBand => f.write_str("one band holds both critical positions"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("induction halted: {0}")]
    Halted(Halt),
    #[error("unsupported surface: genus {g} with {m} punctures")]
    UnsupportedSurface { g: u32, m: u32 },
    #[error("construction failure: {0}")]
    Construction(String),
    #[error("invalid track: {0}")]
    InvalidTrack(String),
    #[error("unavailable: {0}")]
    Unavailable(String),
    #[error("internal consistency failure: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for failures that indicate a bug or a violated invariant rather
    /// than bad user input.
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::Internal(_) | Error::Construction(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
