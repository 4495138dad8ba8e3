//! Scalar root finding on a bracketing interval.

use crate::error::{Error, Result};

const MAX_ITERATIONS: u32 = 200;

/// Find a root of `f` in `[lo, hi]`, which must bracket a sign change.
///
/// Secant steps are taken while they stay inside the bracket and shrink it
/// fast enough; otherwise the step falls back to bisection, so convergence
/// is guaranteed for any continuous `f`. Terminates when `|f(x)| <= tol` or
/// the bracket width drops below `tol * max(1, |x|)`.
pub fn find_root_bracketed<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::Domain {
            name: "bracket",
            value: hi - lo,
            domain: "finite, lo < hi",
        });
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::Domain {
            name: "tol",
            value: tol,
            domain: "(0, inf)",
        });
    }

    let (mut a, mut b) = (lo, hi);
    let mut fa = f(a);
    let mut fb = f(b);
    if !fa.is_finite() || !fb.is_finite() {
        return Err(Error::ModelEvaluation { draw: None });
    }
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoBracket { lo, hi });
    }

    let mut x;
    let mut fx = fa;
    for i in 0..MAX_ITERATIONS {
        // Secant proposal from the current bracket endpoints; every third
        // step bisects regardless, so a one-sided secant stall (convex f,
        // fixed endpoint) still halves the bracket geometrically.
        let secant = b - fb * (b - a) / (fb - fa);
        let mid = 0.5 * (a + b);
        let width = b - a;
        x = if i % 3 != 2 && secant.is_finite() && secant > a && secant < b {
            secant
        } else {
            mid
        };
        // Keep the step a meaningful fraction of the bracket so a stalled
        // secant (root at one end) cannot creep.
        let margin = 0.01 * width;
        x = x.clamp(a + margin, b - margin);
        if !(x > a && x < b) {
            x = mid;
        }

        fx = f(x);
        if !fx.is_finite() {
            return Err(Error::ModelEvaluation { draw: None });
        }
        if fx == 0.0 || fx.abs() <= tol {
            return Ok(x);
        }
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
        if b - a <= tol * f64::max(1.0, x.abs()) {
            // Report the endpoint with the smaller residual.
            return Ok(if fa.abs() <= fb.abs() { a } else { b });
        }
    }
    Err(Error::RootNotConverged { residual: fx.abs() })
}
