use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max |H - H^dagger| entry = {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("trace deviates from 1 by {deviation:e}")]
    TraceNotOne { deviation: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue = {min_eigenvalue:e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("index {index} out of range 0..{len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("amplitude {value} outside the open interval (0, 1)")]
    AmplitudeOutOfRange { value: f64 },

    #[error("constraint violated: {constraint}")]
    ConstraintViolated { constraint: String },

    #[error("parameter {name} = {value} out of range: {reason}")]
    ParameterOutOfRange {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("vector is not a unit vector (norm = {norm})")]
    NotUnitVector { norm: f64 },

    #[error("matrix is not unitary (max |U^dagger U - I| entry = {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("matrix is not a proper rotation (orthogonality error {orthogonality:e}, det = {det})")]
    NotRotation { orthogonality: f64, det: f64 },
}

impl Error {
    /// Stable variant name, used as the `kind` field of machine-readable errors.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NotHermitian { .. } => "NotHermitian",
            Error::TraceNotOne { .. } => "TraceNotOne",
            Error::NotPositive { .. } => "NotPositive",
            Error::IndexOutOfRange { .. } => "IndexOutOfRange",
            Error::AmplitudeOutOfRange { .. } => "AmplitudeOutOfRange",
            Error::ConstraintViolated { .. } => "ConstraintViolated",
            Error::ParameterOutOfRange { .. } => "ParameterOutOfRange",
            Error::NotUnitVector { .. } => "NotUnitVector",
            Error::NotUnitary { .. } => "NotUnitary",
            Error::NotRotation { .. } => "NotRotation",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
