//! Error type shared by every module in the crate.
//!
//! Construction-time validation means most query methods (`pdf`, `cdf`, …)
//! are infallible; everything that can fail at run time funnels into
//! [`Error`]. The CLI maps these onto exit codes, so variants distinguish
//! *invalid input* (parameters, configuration, data) from *numerical
//! failure* (non-convergence, divergence, nonexistent moments).

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A constructor argument is outside its admissible range.
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// A function argument is outside the documented domain.
    #[error("argument `{name}` = {value} outside domain {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    /// The requested central moment does not exist for this family/parameters.
    #[error("central moment of order {order} does not exist for {family}")]
    NonexistentMoment { family: &'static str, order: u32 },

    /// Reciprocal machinery requires strictly positive support.
    #[error("unsupported support: {0}")]
    UnsupportedSupport(String),

    /// Adaptive quadrature ran out of budget before meeting the tolerance.
    /// Carries the partial value so callers can report how far it got.
    #[error(
        "quadrature did not converge: residual {residual:.3e} after {evaluations} \
         evaluations (partial value {partial:.6e})"
    )]
    QuadratureFailure {
        partial: f64,
        residual: f64,
        evaluations: u64,
    },

    /// Root finding needs a sign change over the initial bracket.
    #[error("no sign change over bracket [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },

    /// Iteration limit hit before the root tolerance was met.
    #[error("root finding did not converge: residual {residual:.3e}")]
    RootNotConverged { residual: f64 },

    /// A sample matrix entry is exactly zero, so 1/x is undefined.
    #[error("cannot form reciprocal: zero entry at row {row}, column {column}")]
    ZeroSampleEntry { row: usize, column: usize },

    /// A reciprocal mean entry is zero, so the evaluation point 1/mean_z is undefined.
    #[error("cannot form reciprocal: mean_z[{index}] is zero")]
    ZeroMeanEntry { index: usize },

    /// Statistics requested from too few realizations.
    #[error("estimator undefined for {count} realization(s); at least {needed} required")]
    EstimatorUndefined { count: usize, needed: usize },

    /// More realizations requested than a data-backed input holds.
    #[error("requested {requested} realizations but only {available} are available")]
    CountExceedsData { requested: usize, available: usize },

    /// Objective evaluation produced a non-finite value. `draw` identifies
    /// the Monte Carlo realization when the failure occurred during sampling.
    #[error("model evaluation returned a non-finite value{}", match draw {
        Some(k) => format!(" at draw {k}"),
        None => String::new(),
    })]
    ModelEvaluation { draw: Option<usize> },

    /// The estimator needs a Hessian and the model does not provide one.
    #[error("model declares no Hessian; attach one (analytic or finite-difference)")]
    HessianUnavailable,

    /// Vector/matrix sizes disagree.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A structurally valid request the implementation deliberately refuses
    /// (correlated inputs where independence is required, and the like).
    #[error("unsupported configuration: {0}")]
    UnsupportedConfiguration(String),

    /// Malformed study/distribution configuration (unknown labels, bad keys).
    #[error("configuration error: {0}")]
    Configuration(String),
}

impl Error {
    /// True for failures of the numerics rather than of the input
    /// (the CLI reports these under a separate exit code).
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NonexistentMoment { .. }
                | Error::QuadratureFailure { .. }
                | Error::NoBracket { .. }
                | Error::RootNotConverged { .. }
                | Error::ModelEvaluation { .. }
        )
    }
}
