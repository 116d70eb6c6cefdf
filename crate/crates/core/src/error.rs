use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("mask has no background pixels")]
    AllForeground,
    #[error("mask has no object pixels")]
    AllBackground,
    #[error("mask has no object pixels to test")]
    EmptyObject,
    #[error("GMM class {class} has vanishing weight ({weight:e})")]
    DegenerateClass { class: usize, weight: f64 },
    #[error("scribble set `{0}` is empty")]
    EmptyLabels(&'static str),
    #[error("non-finite value in `{field}` at iteration {iter}")]
    NonFiniteState { iter: usize, field: &'static str },
    #[error("dimension mismatch: expected {expected:?}, got {got:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("landmark ({0}, {1}) is outside the image")]
    LandmarkOutOfBounds(usize, usize),
    #[error("scribble pixel ({0}, {1}) is labelled both object and background")]
    OverlappingLabels(usize, usize),
    #[error("model {model} requires {what}")]
    MissingLabels { model: String, what: &'static str },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
