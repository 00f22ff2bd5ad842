use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the library can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("spacing too coarse: only {interior} interior nodes (need at least 3)")]
    SpacingTooCoarse { interior: usize },
    #[error("{name} = {value} is out of range ({expected})")]
    OutOfRange {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },
    #[error("field does not match grid: {0}")]
    GridMismatch(String),
    #[error("region node {0} is not an interior node")]
    InvalidRegion(usize),
    #[error("field contains non-finite value at node {0}")]
    NonFinite(usize),
    #[error("perturbation is not admissible: nonzero value {value} at boundary node {node}")]
    InadmissiblePerturbation { node: usize, value: f64 },
    #[error("radius {radius} is below the minimum {min}")]
    RadiusTooSmall { radius: f64, min: f64 },
    #[error("ball of radius {radius} around ({x1}, {x2}) leaves the discretized domain")]
    BallExitsDomain { x1: f64, x2: f64, radius: f64 },
    #[error("degenerate data: {0}")]
    Degenerate(String),
    #[error("({x1}, {x2}) is not a free boundary point: no phase exceeds the level offset nearby")]
    NotAFreeBoundaryPoint { x1: f64, x2: f64 },
    #[error("({x1}, {x2}) is not on the positive free boundary")]
    WrongPhase { x1: f64, x2: f64 },
    #[error("positivity set is empty")]
    EmptyPositivitySet,
    #[error("degenerate line fit at vertex {0}: window points coincide")]
    DegenerateFit(usize),
    #[error("scale fit needs at least two distinct radii, got {0}")]
    TooFewRadii(usize),
    #[error("vertex index {0} out of bounds")]
    VertexOutOfBounds(usize),
    #[error("empty data: {0}")]
    EmptyData(&'static str),
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}:{line}: unknown key `{key}`")]
    UnknownKey {
        path: String,
        line: usize,
        key: String,
    },
    #[error("config: {0}")]
    Config(String),
    #[error("malformed {kind} file: {message}")]
    Format { kind: &'static str, message: String },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user input rather than a failed computation.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::UnknownKey { .. }
                | Error::Config(_)
                | Error::OutOfRange { .. }
                | Error::InvalidDomain(_)
                | Error::SpacingTooCoarse { .. }
        )
    }
}
