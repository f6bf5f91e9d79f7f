use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("zero-length curve")]
    ZeroLengthCurve,

    #[error("contour needs at least 2 points, got {0}")]
    TooFewPoints(usize),

    #[error("non-finite coordinate in contour")]
    NonFiniteCoordinate,

    #[error("incomparable contours: {left} vs {right} samples")]
    IncomparableContours { left: usize, right: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unreachable end pose: end separation {separation} exceeds usable length {usable}")]
    UnreachableEndPose { separation: f64, usable: f64 },

    #[error("cable solver did not converge after {iterations} iterations (residual {residual:e})")]
    SolverNotConverged { iterations: usize, residual: f64 },

    #[error("degenerate window: no shape variation")]
    DegenerateWindow,

    #[error("singular normal matrix; increase M or set lambda > 0")]
    SingularNormalMatrix,

    #[error("Broyden update undefined for zero motion")]
    ZeroMotion,

    #[error("prediction requires direct form")]
    PredictionRequiresDirectForm,

    #[error("non-finite control output")]
    NonFiniteControl,

    #[error("plant failure at iteration {iteration}: {source}")]
    Plant {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
