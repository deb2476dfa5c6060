use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("singular matrix")]
    Singular,
    #[error("point maps to infinity (projective depth {0:e})")]
    AtInfinity(f64),
    #[error("degenerate camera pose: {0}")]
    DegeneratePose(String),
    #[error("invalid field dimensions {length} x {width}")]
    FieldDimensions { length: f64, width: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("empty feature database")]
    EmptyDatabase,
    #[error("invalid feature vector (all-zero edge image)")]
    InvalidFeature,
    #[error("no epsilon in the search grid yields exactly two clusters")]
    NoFeasibleEpsilon,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
