use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification used by callers (such as the CLI) to map failures
/// onto exit codes: bad parameters, bad data files, or numerical-validity
/// problems detected at run time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Parameter,
    Data,
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    ParameterDomain(String),

    #[error("matrix file format: {0}")]
    MatrixFormat(String),

    #[error("matrix is not sub-unitary: largest singular value {sigma_max:.9} exceeds 1 + 1e-6")]
    SubUnitary { sigma_max: f64 },

    #[error("orderings above normal order require a unitary matrix: {0}")]
    NonUnitary(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("permutation is not a bijection on 0..{len}")]
    InvalidPermutation { len: usize },

    #[error("invalid binning: {0}")]
    InvalidBinning(String),

    #[error("invalid mode set: {0}")]
    InvalidModeSet(String),

    #[error("correlation orders above 1 are unsupported for non-normal orderings")]
    UnsupportedOrder,

    #[error("no valid bins: every bin has 10 or fewer counts")]
    NoValidBins,

    #[error("lattice mismatch: {0}")]
    LatticeMismatch(String),

    #[error("degenerate variance in bin {bin}: both sampling errors are zero")]
    DegenerateVariance { bin: usize },

    #[error("fit grid is empty")]
    EmptyFitGrid,

    #[error("pattern data: {0}")]
    PatternFormat(String),

    #[error("fake generation requires a classical input family (thermal or squashed), got {0}")]
    NonClassicalFake(String),

    #[error("exact pattern evaluation capped at {cap} modes, got {modes}")]
    OracleCap { modes: usize, cap: usize },

    #[error("covariance failed the uncertainty bound: smallest eigenvalue {min_eig:.3e}")]
    InvalidCovariance { min_eig: f64 },

    #[error("csv data: {0}")]
    CsvFormat(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            ParameterDomain(_)
            | InvalidPermutation { .. }
            | InvalidBinning(_)
            | InvalidModeSet(_)
            | UnsupportedOrder
            | EmptyFitGrid
            | NonClassicalFake(_)
            | ShapeMismatch(_)
            | OracleCap { .. } => ErrorClass::Parameter,
            MatrixFormat(_) | PatternFormat(_) | CsvFormat(_) | LatticeMismatch(_) | Io { .. } => {
                ErrorClass::Data
            }
            SubUnitary { .. }
            | NonUnitary(_)
            | NoValidBins
            | DegenerateVariance { .. }
            | InvalidCovariance { .. } => ErrorClass::Numerical,
        }
    }
}
