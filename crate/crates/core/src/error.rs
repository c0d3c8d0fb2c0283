use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the fitting and evaluation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("point {index} lies outside the partitioning box")]
    PointOutsideBox { index: usize },

    #[error(
        "evaluation point ({point}) is covered by no subdomain; the covering does not reach it"
    )]
    Uncovered { point: String },

    #[error("no feasible (radius, shape) configuration for the patch centred at ({centre})")]
    PatchFit { centre: String },

    #[error(
        "radius growth for the patch centred at ({centre}) exceeded the box diagonal \
         without reaching the target point count; the data distribution is degenerate"
    )]
    DegenerateData { centre: String },

    #[error("patch centred at ({centre}) gathered {count} points, over the cap of {cap}; \
             raise max_local_points or refine the search grid")]
    LocalSizeCap { centre: String, count: usize, cap: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse { line, message: message.into() }
    }
}

/// Renders a coordinate vector for error messages.
pub(crate) fn fmt_point(coords: &[f64]) -> String {
    coords.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(", ")
}
