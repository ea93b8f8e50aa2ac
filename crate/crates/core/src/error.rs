use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("{name} = {value} is outside its domain: {constraint}")]
    Domain {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },

    /// A matrix failed a structural check (unitarity, determinant, trace...).
    #[error("validation failed: {0}")]
    Validation(String),

    /// Two consecutive path vertices are antipodal, so the connecting
    /// great-circle arc is not unique.
    #[error("ambiguous geodesic between vertices {from} and {to} (antipodal points)")]
    AmbiguousGeodesic { from: usize, to: usize },

    /// Measured intensities are incompatible with any physical state.
    #[error("inconsistent data: {quantity} = {value:e} ({reason})")]
    InconsistentData {
        quantity: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("empty trace")]
    EmptyTrace,

    #[error("invalid path: {0}")]
    InvalidPath(String),
}

impl Error {
    pub(crate) fn domain(name: &'static str, value: f64, constraint: &'static str) -> Self {
        Error::Domain {
            name,
            value,
            constraint,
        }
    }
}
