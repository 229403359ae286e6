use thiserror::Error;

/// Errors raised by the geometry, packing and graph routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("half-space intersection is unbounded")]
    Unbounded,

    #[error("half-space intersection has empty interior")]
    EmptyInterior,

    #[error("vertex {index} is within {margin} of the window boundary (needs at least {required})")]
    NotInterior {
        index: usize,
        margin: f64,
        required: f64,
    },

    #[error("ball of radius {radius} around the query point leaves the packing window (margin {margin})")]
    WindowOverflow { radius: f64, margin: f64 },

    #[error("vertex function has no value for interior vertex {0}")]
    MissingValue(usize),

    #[error("NOT_PLANE_GRAPH: {0}")]
    NotPlaneGraph(String),

    #[error("invalid plane graph: {0}")]
    InvalidGraph(String),

    #[error("invalid packing: {0}")]
    InvalidPacking(String),

    #[error("invalid linear program: {0}")]
    InvalidProgram(String),

    #[error(
        "SOUNDNESS_VIOLATION: relaxation bound {bound} is below sampled objective {sampled} on box {box_index}"
    )]
    SoundnessViolation {
        bound: f64,
        sampled: f64,
        box_index: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
