use thiserror::Error;

pub type Result<T> = std::result::Result<T, TfcError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TfcError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point z = {z} lies outside the basis domain [-1, 1]")]
    Domain { z: f64 },

    /// The support matrix built from the chosen support functions cannot be
    /// inverted, so no switching functions exist for this support set.
    #[error("support set {supports} is singular for these constraints (sigma_min/sigma_max = {ratio:e})")]
    SingularSupport { supports: String, ratio: f64 },

    #[error("no valid support set found with monomials up to degree {max_degree}")]
    NoValidSupport { max_degree: usize },

    #[error("derivative of total order {required} requested but only {available} is available")]
    Capability { required: u32, available: u32 },

    #[error("problem is nonlinear in u; use the Gauss-Newton solver")]
    WrongSolver,

    #[error("numerical failure: {0}")]
    Numerical(String),
}
