use thiserror::Error;

/// Failures raised by the numerical layers (linear algebra, geometry,
/// optimizers and the simulation harness).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("closed loop is not stable (spectral radius {radius})")]
    NotStable { radius: f64 },

    #[error("vectorized linear system is numerically singular")]
    SingularSolve,

    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },

    #[error("matrix is not symmetric (asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("no stabilizing gain could be found for (A, B)")]
    NotStabilizable,

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("metric weight is singular (smallest eigenvalue {lambda_min:e})")]
    SingularMetric { lambda_min: f64 },

    #[error("constraint Gram matrix is singular")]
    SingularConstraint,

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid cost pair: {0}")]
    InvalidCost(String),

    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),

    #[error("initial gain is infeasible: {0}")]
    InfeasibleInit(String),

    #[error("degenerate random draw: {0}")]
    DegenerateDraw(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("closed loop is numerically defective (eigenvector condition {condition:e})")]
    DefectiveClosedLoop { condition: f64 },

    /// A failure inside an online or comparator loop, tagged with the round
    /// (1-based) and the stage that produced it.
    #[error("round {round} ({stage}): {source}")]
    AtRound {
        round: usize,
        stage: String,
        source: Box<Error>,
    },
}

impl Error {
    pub fn at_round(self, round: usize, stage: impl Into<String>) -> Self {
        Error::AtRound {
            round,
            stage: stage.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
