use thiserror::Error;

use crate::sdp::SolverResiduals;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid generator parameters: {0}")]
    InvalidGenerator(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{n} qubits exceeds the limit of {limit}")]
    TooLarge { n: usize, limit: usize },

    #[error(
        "SDP solver did not converge after {} iterations (primal {:.3e}, dual {:.3e})",
        .residuals.iterations, .residuals.primal, .residuals.dual
    )]
    NotConverged { residuals: SolverResiduals },

    #[error("SDP model not expressible as signed entry equalities: {0}")]
    UnsupportedConstraint(String),

    #[error("Gram matrix is not PSD to tolerance: min eigenvalue {min_eigenvalue:.3e}")]
    NotPsd { min_eigenvalue: f64 },

    #[error("corrupt SDP solution: {0}")]
    CorruptSolution(String),

    #[error("edge ({i},{j}) is not cut; no closed form is available")]
    UncutEdge { i: usize, j: usize },

    #[error("negative circuit angle {theta} on edge ({i},{j})")]
    NegativeAngle { i: usize, j: usize, theta: f64 },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}
