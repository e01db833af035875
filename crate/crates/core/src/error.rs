use thiserror::Error;

/// Errors raised by model construction, linear algebra and the estimate
/// machinery.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("structure constants not antisymmetric at (i, j, k) = ({i}, {j}, {k}): c^k_ij = {cij}, c^k_ji = {cji}")]
    Antisymmetry {
        i: usize,
        j: usize,
        k: usize,
        cij: f64,
        cji: f64,
    },

    #[error("Jacobi identity violated at (i, j, k; l) = ({i}, {j}, {k}; {l}): residual {residual:e}")]
    Jacobi {
        i: usize,
        j: usize,
        k: usize,
        l: usize,
        residual: f64,
    },

    #[error("metric is not positive definite: minimum eigenvalue {min_eigenvalue:e}")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("metric does not match model: {0}")]
    MetricShape(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("argument error: {0}")]
    Argument(String),

    #[error("non-finite value {value} while bracketing on [{lo}, {hi}]")]
    Overflow { lo: f64, hi: f64, value: f64 },

    #[error("trajectory schema error in column `{column}`: {reason}")]
    Schema { column: String, reason: String },

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T, E = LabError> = std::result::Result<T, E>;

impl From<std::io::Error> for LabError {
    fn from(e: std::io::Error) -> Self {
        LabError::Io(e.to_string())
    }
}

impl From<csv::Error> for LabError {
    fn from(e: csv::Error) -> Self {
        LabError::Io(e.to_string())
    }
}
