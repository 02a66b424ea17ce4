use thiserror::Error;

/// Errors raised by the numerical kernels, validators and I/O layer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian (max |M - M^dagger| = {deviation:e}, tolerance {tol:e})")]
    NotHermitian { deviation: f64, tol: f64 },

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix columns are linearly dependent (column {column} has residual norm {norm:e})")]
    RankDeficient { column: usize, norm: f64 },

    #[error("matrix is not positive semi-definite (min eigenvalue {min_eigenvalue:e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("invalid probability vector: {0}")]
    InvalidDistribution(String),

    #[error("matrix has zero trace")]
    ZeroTrace,

    #[error("Kraus operators are not trace preserving (max |sum K^dagger K - I| = {max_deviation:e})")]
    NotTracePreserving { max_deviation: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("matrix is not unitary (max |U^dagger U - I| = {max_deviation:e})")]
    NotUnitary { max_deviation: f64 },

    #[error("projectors do not form an orthogonal resolution of the identity (deviation {max_deviation:e})")]
    NotAResolutionOfIdentity { max_deviation: f64 },

    #[error("output projectors do not resolve the identity (deviation {max_deviation:e})")]
    OutputNotResolutionOfIdentity { max_deviation: f64 },

    #[error("parameter {name} = {value} outside of {range}")]
    ParameterOutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("inconsistent conditional table: {0}")]
    InconsistentTable(String),

    #[error("chain property violated after consistency adjustment (residual {residual:e})")]
    ConsistencyResidual { residual: f64 },

    #[error("trajectory batch is empty")]
    EmptyBatch,

    #[error("decomposition needs at least rank(rho) = {rank} members, got {members}")]
    RankTooSmall { rank: usize, members: usize },

    #[error("matrix is not positive semi-definite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("power p = {0} outside of [0, 1]")]
    PowerOutOfRange(f64),

    #[error("matrix is not doubly stochastic (max row/column sum deviation {max_deviation:e})")]
    NotDoublyStochastic { max_deviation: f64 },

    #[error("unknown check {0:?}")]
    UnknownCheck(String),

    #[error("unknown demo {0:?}")]
    UnknownDemo(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("schema mismatch in field `{field}`: {message}")]
    SchemaMismatch { field: String, message: String },

    #[error("document failed validation: {0}")]
    Validation(Box<Error>),
}

pub type Result<T> = std::result::Result<T, Error>;
