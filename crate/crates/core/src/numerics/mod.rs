//! Shared numerical primitives: adaptive quadrature, bracketed root
//! finding, finite differences and stable summation. Everything here is
//! deterministic — identical inputs give bitwise identical outputs.

mod finite_diff;
mod quadrature;
mod roots;
mod sum;

pub use finite_diff::{gradient, hessian_diag, GRADIENT_STEP, HESSIAN_STEP};
pub use quadrature::{
    integrate_adaptive, integrate_semi_infinite, QuadratureResult, DEFAULT_EVAL_BUDGET,
};
pub use roots::find_root_bracketed;
pub use sum::{pairwise_mean, pairwise_sum};
