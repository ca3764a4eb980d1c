use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid weight: {0}")]
    InvalidWeight(String),
    #[error("invalid label: {0}")]
    InvalidLabel(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("not a group element: {0}")]
    NotInGroup(String),
    #[error("Iwasawa decomposition failed: light-cone coordinate {0} is not positive")]
    Iwasawa(f64),
    #[error("truncation overflow: defect {defect:.3e} exceeds tolerance {tolerance:.3e}")]
    TruncationOverflow { defect: f64, tolerance: f64 },
    #[error("K-type {0} is not a K-type of the label")]
    NotContained(String),
    #[error("vectors carry different labels or cutoffs")]
    LabelMismatch,
    #[error("invalid Gamma argument: {0}")]
    InvalidGamma(String),
    #[error("degenerate configuration: {0}")]
    Degenerate(String),
    #[error("invalid spectral data: {0}")]
    InvalidSpectral(String),
    #[error("quadrature failure: {0}")]
    Quadrature(String),
}

pub type Result<T> = std::result::Result<T, Error>;
