use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the geometry, splitting and geodesic routines.
#[derive(Debug, Error)]
pub enum Error {
    /// Grid size below the minimum supported resolution.
    #[error("grid needs at least 8 points, got {0}")]
    InvalidGrid(usize),
    /// A sample was NaN or infinite.
    #[error("non-finite sample at index {index}")]
    NonFinite { index: usize },
    /// Field length does not match the grid.
    #[error("field has {found} samples but the grid has {expected}")]
    LengthMismatch { expected: usize, found: usize },
    /// Metric coefficient not strictly positive.
    #[error("metric coefficient {value} at index {index} is not positive")]
    NonPositiveMetric { index: usize, value: f64 },
    /// The graph left the chart domain: its spacelike margin fell to or below the floor.
    #[error("graph is not spacelike: margin {margin:.3e} at index {index} (floor {floor:.1e})")]
    SpacelikeViolation { margin: f64, index: usize, floor: f64 },
    /// A graph value left the time domain of the splitting.
    #[error("graph value t = {t} at index {index} lies outside the time domain ({min}, {max})")]
    DomainViolation { t: f64, index: usize, min: f64, max: f64 },
    /// Time derivatives requested from a model that has none and may not approximate them.
    #[error("model `{0}` has no analytic time derivatives and the finite-difference fallback is disabled")]
    MissingDerivative(&'static str),
    /// The two tangent vectors do not span a plane.
    #[error("tangent vectors are linearly dependent (normalised Gram determinant {0:.3e})")]
    DegeneratePlane(f64),
    /// The base slice cannot be moved to the zero section by a time translation.
    #[error("cannot re-base the splitting onto the requested slice: {0}")]
    RebaseUnavailable(String),
    /// The lapse-volume minimum m(t) was not positive.
    #[error("lapse-volume minimum m(t) = {value} at t = {t} is not positive")]
    NonPositiveM { t: f64, value: f64 },
    /// The reparametrization window cannot cover the requested range.
    #[error("time window exhausted: {0}")]
    WindowExhausted(String),
    /// The reparametrized splitting failed its own lapse-bound check.
    #[error("reparametrized splitting violates the lapse bound: min {min} < {threshold}")]
    LapseCertificate { min: f64, threshold: f64 },
    /// The seed path of a boundary-value solve leaves the chart domain.
    #[error("seed path is not spacelike at knot {knot}: {source}")]
    SeedNotSpacelike {
        knot: usize,
        #[source]
        source: Box<Error>,
    },
    /// Malformed input parameters.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// Malformed model configuration.
    #[error("invalid model configuration: {0}")]
    Config(String),
    /// Malformed field specification.
    #[error("invalid field specification `{spec}`: {reason}")]
    FieldSpec { spec: String, reason: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors signalling that a graph left the chart domain or the time domain.
    pub fn is_domain_error(&self) -> bool {
        matches!(
            self,
            Error::SpacelikeViolation { .. }
                | Error::DomainViolation { .. }
                | Error::SeedNotSpacelike { .. }
                | Error::DegeneratePlane(_)
                | Error::NonPositiveM { .. }
                | Error::WindowExhausted(_)
                | Error::RebaseUnavailable(_)
                | Error::MissingDerivative(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
