use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("interval [{t1}, {t2}] is not inside [0, {horizon}] or is reversed")]
    InvalidInterval { t1: f64, t2: f64, horizon: f64 },

    #[error("degenerate A-vector: {0}")]
    DegenerateState(&'static str),

    #[error("dominant eigenvalue is not unique (|λ1| = {0}, |λ2| = {1})")]
    DegenerateDominance(f64, f64),

    #[error("rate fit: {0}")]
    Fit(String),

    #[error("branch count {live} exceeds the cap of {cap}; enable pruning or merging")]
    BranchCap { live: usize, cap: usize },

    #[error("configuration: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
