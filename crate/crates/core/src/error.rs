use thiserror::Error;

/// Errors raised by the geometric operations.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("fields live on different grids ({left} vs {right})")]
    GridMismatch { left: String, right: String },

    #[error("operation `{op}` is not available on {topology}")]
    Unsupported { op: &'static str, topology: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is not symmetric at node {node} (asymmetry {asymmetry:e})")]
    NotSymmetric { node: usize, asymmetry: f64 },

    #[error("matrix is not Hermitian at node {node} (defect {defect:e})")]
    NotHermitian { node: usize, defect: f64 },

    #[error("tensor is not J-invariant at node {node} (defect {defect:e})")]
    NotJInvariant { node: usize, defect: f64 },

    #[error("metric is singular or indefinite at node {node} (smallest eigenvalue {eigenvalue:e})")]
    Singular { node: usize, eigenvalue: f64 },

    #[error("Kähler positivity violated at node {node} (coordinates {coords:?}, smallest eigenvalue {eigenvalue:e})")]
    Positivity {
        node: usize,
        coords: Vec<f64>,
        eigenvalue: f64,
    },

    #[error("metric degenerates at t = {time} (node {node})")]
    Degenerate { time: f64, node: usize },

    #[error("density is negative at node {node} (value {value:e})")]
    NegativeDensity { node: usize, value: f64 },

    #[error("density vanishes at node {node}")]
    VanishingDensity { node: usize },

    #[error("total mass {mass} differs from the required {expected}")]
    WrongMass { mass: f64, expected: f64 },

    #[error("normalization violated: {0}")]
    Normalization(String),

    #[error("tangent vector is not tangent to the Kähler submanifold: mean trace {mean_trace:e}")]
    NotTangent { mean_trace: f64 },

    #[error("right-hand side is not mean-zero (relative mean {relative_mean:e})")]
    NotMeanZero { relative_mean: f64 },

    #[error("iterative solver stalled after {iterations} iterations (relative residual {residual:e})")]
    SolverStalled { iterations: usize, residual: f64 },

    #[error("numerical abort: {0}")]
    NumericalAbort(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
