use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("splitting is empty")]
    SplittingEmpty,
    #[error("splitting covers all {0} modes")]
    SplittingFull(usize),
    #[error("mode index {index} out of range for order {order}")]
    SplittingOutOfRange { index: usize, order: usize },
    #[error("mode index {0} listed twice in splitting")]
    SplittingDuplicate(usize),
    #[error("invalid dimensions: {0}")]
    InvalidDims(String),
    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch { expected: Vec<usize>, found: Vec<usize> },
    #[error("{what} needs {requested} entries, limit is {limit}")]
    Capacity {
        what: &'static str,
        requested: usize,
        limit: usize,
    },
    #[error("one-sided Jacobi SVD did not converge after {0} sweeps")]
    SvdNoConvergence(usize),
    #[error("{0}")]
    Numerical(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("operator construction failed: {0}")]
    Construction(String),
    #[error("factor {0} is not symmetric")]
    FactorNotSymmetric(String),
    #[error("factor {0} is not positive semidefinite")]
    FactorNotPsd(String),
    #[error("operator is not symmetric positive definite (smallest eigenvalue bound {0:e})")]
    NotSpd(f64),
    #[error("analytic spectral bounds ({analytic_lo}, {analytic_hi}) inconsistent with computed ({computed_lo}, {computed_hi})")]
    InconsistentBounds {
        analytic_lo: f64,
        analytic_hi: f64,
        computed_lo: f64,
        computed_hi: f64,
    },
    #[error("smallest eigenvalue is not simple: lambda1 = {lambda1}, lambda2 = {lambda2}")]
    Lambda1Degenerate { lambda1: f64, lambda2: f64 },
    #[error("rank-one start is orthogonal to the eigenvector (overlap {0:e})")]
    OrthogonalStart(f64),
    #[error("start violates the affine constraint (inner-product defect {0:e})")]
    InadmissibleStart(f64),
    #[error("start does not have t-rank one (measured {0})")]
    StartNotRankOne(usize),
    #[error("hypothesis q^2 R < 1 unmet (q^2 R = {0})")]
    HypothesisUnmet(f64),
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },
}

impl Error {
    /// Stable machine-readable code, used by the CLI on its error stream.
    pub fn reason(&self) -> &'static str {
        match self {
            Error::SplittingEmpty => "splitting_empty",
            Error::SplittingFull(_) => "splitting_full",
            Error::SplittingOutOfRange { .. } => "splitting_out_of_range",
            Error::SplittingDuplicate(_) => "splitting_duplicate",
            Error::InvalidDims(_) => "dims_invalid",
            Error::ShapeMismatch { .. } => "shape_mismatch",
            Error::Capacity { .. } => "capacity_exceeded",
            Error::SvdNoConvergence(_) => "svd_no_convergence",
            Error::Numerical(_) => "numerical",
            Error::Domain(_) => "domain",
            Error::Construction(_) => "construction",
            Error::FactorNotSymmetric(_) => "factor_not_symmetric",
            Error::FactorNotPsd(_) => "factor_not_psd",
            Error::NotSpd(_) => "not_spd",
            Error::InconsistentBounds { .. } => "inconsistent_bounds",
            Error::Lambda1Degenerate { .. } => "lambda1_degenerate",
            Error::OrthogonalStart(_) => "orthogonal_start",
            Error::InadmissibleStart(_) => "inadmissible_start",
            Error::StartNotRankOne(_) => "start_not_rank_one",
            Error::HypothesisUnmet(_) => "hypothesis_unmet",
            Error::Config(_) => "config_invalid",
            Error::Io { .. } => "io",
            Error::Csv { .. } => "csv_invalid",
        }
    }
}
