use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("coefficient vector has length {found}, basis has {expected} elements")]
    CoefficientLength { expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("matrix is not symmetric (max deviation {deviation:e})")]
    Asymmetric { deviation: f64 },

    #[error("operation requires the {required} basis")]
    UnsupportedBasis { required: &'static str },

    #[error("invalid box: {0}")]
    InvalidBox(String),

    #[error(
        "moment matrix is not numerically positive definite (degree {degree}); \
         the degree is too high for double precision in this basis, try the chebyshev basis"
    )]
    NotPositiveDefinite { degree: u32 },

    #[error("point cloud is empty")]
    EmptyPointCloud,

    #[error("point {index} lies outside the bounding box")]
    PointOutsideBox { index: usize },

    #[error(
        "grid of {size} points exceeds the limit of {limit}; \
         lower the points per axis or use quasi-random sampling"
    )]
    GridTooLarge { size: usize, limit: usize },

    #[error("invalid grid specification: {0}")]
    InvalidGrid(String),

    #[error(
        "linear program is unbounded at degree {degree}: the grid is too coarse to keep the \
         polynomial nonnegative between grid points; refine the grid or lower the degree"
    )]
    Unbounded { degree: u32 },

    #[error("LP solver failed: {0}")]
    Solver(String),

    #[error("unsupported dimension {0} for component counting (max 3)")]
    UnsupportedDimension(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
