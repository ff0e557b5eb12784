use thiserror::Error;

use crate::estimate::FitReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("optimizer did not converge within {iterations} iterations")]
    NonConvergence { iterations: usize },

    /// The fit finished but `J^T J` is numerically singular. The report is kept
    /// so callers can inspect it; its covariance is flagged unreliable.
    #[error("Jacobian is numerically singular (condition number {condition:.3e})")]
    SingularJacobian { condition: f64, report: Box<FitReport> },

    #[error("insufficient data: need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("boundary moments do not identify the rates when U_max is close to A(0)")]
    DegenerateIdentification,

    #[error("identification quadratic has no positive root")]
    NoPositiveRoot,

    #[error("no interior extremum: the curve is monotone or the rates are equal")]
    NoInteriorExtremum,

    #[error("no window satisfies the preregistered rule: {0}")]
    WindowInfeasible(String),

    #[error("degenerate design: {0}")]
    DegenerateDesign(String),

    #[error("collinear design matrix")]
    CollinearDesign,

    #[error("residual vector has zero norm")]
    ZeroResidualNorm,

    #[error("regressor has no variation")]
    DegenerateRegressor,

    #[error("log-likelihood differences have zero variance")]
    ZeroVariance,

    #[error("series too short: need at least {needed} points, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("binomial success probability outside (0, 1) at design point {index}")]
    BinomialBoundary { index: usize },

    #[error("Poisson mean is not positive at design point {index}")]
    PoissonBoundary { index: usize },

    /// The nuisance block is singular; the unprofiled (alpha, beta) block is returned.
    #[error("nuisance information block is singular")]
    SingularNuisance { unprofiled: [[f64; 2]; 2] },

    #[error("lower confidence bound on the mean failure cost is not positive ({0})")]
    NonpositiveLowerBound(f64),

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse { row: usize, column: String, message: String },

    #[error("time column is not strictly increasing at row {row}")]
    NonMonotoneTime { row: usize },

    #[error("unknown dataset `{0}`")]
    UnknownDataset(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Whether the failure stems from invalid input rather than numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Domain(_)
                | Error::InsufficientData { .. }
                | Error::WindowInfeasible(_)
                | Error::TooShort { .. }
                | Error::Parse { .. }
                | Error::NonMonotoneTime { .. }
                | Error::UnknownDataset(_)
                | Error::Io(_)
                | Error::BinomialBoundary { .. }
                | Error::PoissonBoundary { .. }
                | Error::DegenerateIdentification
        )
    }
}
