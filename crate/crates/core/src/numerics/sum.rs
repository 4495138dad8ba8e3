//! Pairwise (cascade) summation.
//!
//! Monte Carlo accumulators must not depend on reduction order at the
//! 1e-12 level; pairwise summation keeps the rounding error at
//! O(eps·log n) instead of O(eps·n) and is deterministic for a given
//! slice, whatever produced it.

const PAIRWISE_BASE: usize = 32;

/// Sum `values` with pairwise recursion.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= PAIRWISE_BASE {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Arithmetic mean via pairwise summation. Empty input returns NaN.
pub fn pairwise_mean(values: &[f64]) -> f64 {
    pairwise_sum(values) / values.len() as f64
}
