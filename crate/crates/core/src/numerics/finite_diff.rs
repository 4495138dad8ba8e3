//! Central finite differences for gradients and Hessian diagonals.
//!
//! Step sizes follow the estimator contracts: h = max(1e-6, 1e-6·|x_i|)
//! for first derivatives and h = max(1e-4, 1e-4·|x_i|) for second — the
//! larger second-derivative step trades truncation error against the
//! cancellation in (f(x+h) - 2 f(x) + f(x-h)) / h².

use crate::error::{Error, Result};

pub const GRADIENT_STEP: f64 = 1e-6;
pub const HESSIAN_STEP: f64 = 1e-4;

fn eval<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64]) -> Result<f64> {
    let y = f(x);
    if y.is_finite() {
        Ok(y)
    } else {
        Err(Error::ModelEvaluation { draw: None })
    }
}

/// Central-difference gradient of `f` at `x`.
pub fn gradient<F: Fn(&[f64]) -> f64>(f: F, x: &[f64]) -> Result<Vec<f64>> {
    let mut probe = x.to_vec();
    let mut out = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let h = f64::max(GRADIENT_STEP, GRADIENT_STEP * x[i].abs());
        probe[i] = x[i] + h;
        let fp = eval(&f, &probe)?;
        probe[i] = x[i] - h;
        let fm = eval(&f, &probe)?;
        probe[i] = x[i];
        out.push((fp - fm) / (2.0 * h));
    }
    Ok(out)
}

/// Central-difference diagonal of the Hessian of `f` at `x`.
pub fn hessian_diag<F: Fn(&[f64]) -> f64>(f: F, x: &[f64]) -> Result<Vec<f64>> {
    let f0 = eval(&f, x)?;
    let mut probe = x.to_vec();
    let mut out = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let h = f64::max(HESSIAN_STEP, HESSIAN_STEP * x[i].abs());
        probe[i] = x[i] + h;
        let fp = eval(&f, &probe)?;
        probe[i] = x[i] - h;
        let fm = eval(&f, &probe)?;
        probe[i] = x[i];
        out.push((fp - 2.0 * f0 + fm) / (h * h));
    }
    Ok(out)
}
