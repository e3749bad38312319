use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid model parameter: {0}")]
    Parameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The residual variance `Γ_jj - <Γ_{-j,j}, β_j>` of a nodewise regression was not positive.
    #[error("degenerate node {node}: residual variance {residual_variance:.3e} is not positive")]
    DegenerateNode { node: usize, residual_variance: f64 },

    #[error("column {column} has zero observation probability")]
    DegenerateColumn { column: usize },

    #[error("observed covariance sub-block for row {row} is singular")]
    Evaluation { row: usize },

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code for command-line front ends: 2 for usage or configuration
    /// problems, 3 for numerical failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Input(_)
            | Error::Config(_)
            | Error::Parameter(_)
            | Error::Parse { .. }
            | Error::Json(_)
            | Error::Csv(_) => 2,
            Error::Numerical(_)
            | Error::DegenerateNode { .. }
            | Error::DegenerateColumn { .. }
            | Error::Evaluation { .. } => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
