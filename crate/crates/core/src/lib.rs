//! Moment propagation for objectives of random parameters.
//!
//! Given an objective `g(x)` of random inputs `X`, this crate estimates the
//! mean and standard deviation of `g(X)` by several routes:
//!
//! - [`propagation::fosm`] — first-order Taylor expansion about the mean.
//! - [`propagation::sofm`] — second-order mean / second-moment variance,
//!   using diagonal curvature and marginal third/fourth central moments.
//! - [`propagation::rec_fosm`] — first-order expansion in the *reciprocal*
//!   variables `z = 1/x`, which is exact for objectives of the form `c/x`
//!   and markedly better than plain linearisation for any objective that
//!   decays hyperbolically in its inputs.
//! - [`propagation::monte_carlo`] — direct sampling with standard-error
//!   reporting.
//!
//! The reciprocal route needs the first two moments of `1/X`; the
//! [`reciprocal`] module computes them analytically where a closed form
//! exists, by adaptive quadrature otherwise, or from measured samples.
//! A small library of parametric [`distributions`] supplies densities,
//! moments and samplers, and [`beam`] carries the cantilever tip-deflection
//! objective used throughout the tests and the command line tool.

pub mod beam;
pub mod distributions;
mod error;
pub mod numerics;
pub mod propagation;
pub mod reciprocal;

pub use error::{Error, Result};
