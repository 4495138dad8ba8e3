//! Parametric scalar distributions: densities, quantiles, samplers and
//! analytic central moments through fourth order.
//!
//! A [`Distribution`] is a base [`Family`] composed with an affine map
//! `Y = scale·X + shift` (scale > 0). The affine layer is what lets a
//! study express "modulus = 70 · F(25, 100)" without a dedicated family.
//!
//! The Weibull density is parameterised as `a·b·x^(b−1)·e^(−a·x^b)` — a
//! combined scale-rate `a` and shape `b` — rather than the more common
//! scale/shape form, so published reference values for that form can be
//! compared digit for digit.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use statrs::function::erf::{erf, erf_inv};
use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::error::{Error, Result};
use crate::numerics::find_root_bracketed;

/// Residual tolerance on |cdf(x) − u| for quantiles that have no closed
/// form (Gamma, FisherF) and fall back to a bracketed root-find.
pub const INVERSE_CDF_TOL: f64 = 1e-10;

/// Base distribution family, before any affine transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// Density `a·b·x^(b−1)·e^(−a·x^b)` on x > 0; `rate` is `a`, `shape` is `b`.
    Weibull { rate: f64, shape: f64 },
    /// Fisher–Snedecor F with `d1` (numerator) and `d2` (denominator) degrees.
    FisherF { d1: f64, d2: f64 },
    Normal { mean: f64, sd: f64 },
    /// `ln X ~ Normal(log_mean, log_sd)`.
    LogNormal { log_mean: f64, log_sd: f64 },
    /// Density `rate^shape·x^(shape−1)·e^(−rate·x)/Γ(shape)`.
    Gamma { shape: f64, rate: f64 },
    Uniform { lower: f64, upper: f64 },
}

impl Family {
    fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, value: f64| -> Result<()> {
            if value.is_finite() && value > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be a finite positive real",
                })
            }
        };
        let finite = |name: &'static str, value: f64| -> Result<()> {
            if value.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be finite",
                })
            }
        };
        match *self {
            Family::Weibull { rate, shape } => {
                positive("a", rate)?;
                positive("b", shape)
            }
            Family::FisherF { d1, d2 } => {
                positive("m", d1)?;
                positive("n", d2)
            }
            // A zero-sd (or zero-width) distribution is degenerate: every
            // estimator downstream divides by or compares against σ, so
            // degeneracy is rejected at construction rather than surfacing
            // as NaN later.
            Family::Normal { mean, sd } => {
                finite("mean", mean)?;
                positive("sd", sd)
            }
            Family::LogNormal { log_mean, log_sd } => {
                finite("log_mean", log_mean)?;
                positive("log_sd", log_sd)
            }
            Family::Gamma { shape, rate } => {
                positive("shape", shape)?;
                positive("rate", rate)
            }
            Family::Uniform { lower, upper } => {
                finite("lower", lower)?;
                finite("upper", upper)?;
                if lower < upper {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter {
                        name: "upper",
                        value: upper,
                        reason: "must exceed lower",
                    })
                }
            }
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Family::Weibull { .. } => "weibull",
            Family::FisherF { .. } => "fisher_f",
            Family::Normal { .. } => "normal",
            Family::LogNormal { .. } => "log_normal",
            Family::Gamma { .. } => "gamma",
            Family::Uniform { .. } => "uniform",
        }
    }
}

/// Interval carrying the support of a distribution; bounds may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Support {
    pub lower: f64,
    pub upper: f64,
}

/// Provenance of a [`MomentSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exactness {
    /// Closed-form evaluation of the family's moment formulas.
    Analytic,
    /// Numerical integration against the density.
    Quadrature,
    /// Empirical estimate from `count` realizations.
    Sampled { count: u64 },
}

/// Mean and central moments through fourth order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSet {
    pub mean: f64,
    pub variance: f64,
    /// Third central moment E[(X−μ)³].
    pub mu3: f64,
    /// Fourth central moment E[(X−μ)⁴].
    pub mu4: f64,
    pub exactness: Exactness,
}

impl MomentSet {
    pub fn sd(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// A base family composed with `Y = scale·X + shift`, scale > 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Distribution {
    family: Family,
    scale: f64,
    shift: f64,
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            Family::Weibull { rate, shape } => write!(f, "weibull(a={rate}, b={shape})")?,
            Family::FisherF { d1, d2 } => write!(f, "fisher_f(m={d1}, n={d2})")?,
            Family::Normal { mean, sd } => write!(f, "normal(mean={mean}, sd={sd})")?,
            Family::LogNormal { log_mean, log_sd } => {
                write!(f, "log_normal(log_mean={log_mean}, log_sd={log_sd})")?
            }
            Family::Gamma { shape, rate } => write!(f, "gamma(shape={shape}, rate={rate})")?,
            Family::Uniform { lower, upper } => write!(f, "uniform({lower}, {upper})")?,
        }
        if self.scale != 1.0 {
            write!(f, " × {}", self.scale)?;
        }
        if self.shift != 0.0 {
            write!(f, " + {}", self.shift)?;
        }
        Ok(())
    }
}

impl Distribution {
    /// Distribution of the bare family (scale 1, shift 0).
    pub fn new(family: Family) -> Result<Self> {
        Self::transformed(family, 1.0, 0.0)
    }

    /// Distribution of `scale·X` for X drawn from `family`.
    pub fn scaled(family: Family, scale: f64) -> Result<Self> {
        Self::transformed(family, scale, 0.0)
    }

    /// Distribution of `scale·X + shift` for X drawn from `family`.
    pub fn transformed(family: Family, scale: f64, shift: f64) -> Result<Self> {
        family.validate()?;
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidParameter {
                name: "scale",
                value: scale,
                reason: "must be a finite positive real",
            });
        }
        if !shift.is_finite() {
            return Err(Error::InvalidParameter {
                name: "shift",
                value: shift,
                reason: "must be finite",
            });
        }
        Ok(Distribution {
            family,
            scale,
            shift,
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn family_name(&self) -> &'static str {
        self.family.name()
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Replace the affine transform, keeping the base family.
    pub fn with_transform(&self, scale: f64, shift: f64) -> Result<Self> {
        Self::transformed(self.family, scale, shift)
    }

    pub fn support(&self) -> Support {
        let (lo, hi) = match self.family {
            Family::Weibull { .. } | Family::FisherF { .. } | Family::Gamma { .. } => {
                (0.0, f64::INFINITY)
            }
            Family::LogNormal { .. } => (0.0, f64::INFINITY),
            Family::Normal { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Family::Uniform { lower, upper } => (lower, upper),
        };
        Support {
            lower: self.scale * lo + self.shift,
            upper: self.scale * hi + self.shift,
        }
    }

    /// Density at `y`; zero outside the support.
    pub fn pdf(&self, y: f64) -> f64 {
        if !y.is_finite() {
            return 0.0;
        }
        let x = (y - self.shift) / self.scale;
        base_pdf(&self.family, x) / self.scale
    }

    /// Cumulative distribution at `y`.
    pub fn cdf(&self, y: f64) -> f64 {
        if y.is_nan() {
            return f64::NAN;
        }
        let x = (y - self.shift) / self.scale;
        base_cdf(&self.family, x)
    }

    /// Quantile for `u ∈ [0, 1)`; monotone in `u`.
    ///
    /// Closed forms are used where they exist (Weibull, Uniform, Normal,
    /// LogNormal); Gamma and FisherF invert the CDF by a bracketed
    /// root-find with residual tolerance [`INVERSE_CDF_TOL`].
    pub fn inverse_cdf(&self, u: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&u) {
            return Err(Error::Domain {
                name: "u",
                value: u,
                domain: "[0, 1)",
            });
        }
        Ok(self.scale * base_inverse_cdf(&self.family, u)? + self.shift)
    }

    /// Mean, if it exists for the family parameters.
    pub fn mean(&self) -> Result<f64> {
        Ok(self.scale * base_raw_mean(&self.family)? + self.shift)
    }

    /// Variance, if it exists for the family parameters.
    pub fn variance(&self) -> Result<f64> {
        Ok(self.scale * self.scale * base_variance(&self.family)?)
    }

    /// Mean and central moments through fourth order, affine transform
    /// applied (mean maps through `scale·μ + shift`; the k-th central
    /// moment picks up `scaleᵏ`).
    pub fn moments(&self) -> Result<MomentSet> {
        let base = base_moments(&self.family)?;
        let s = self.scale;
        Ok(MomentSet {
            mean: s * base.mean + self.shift,
            variance: s * s * base.variance,
            mu3: s * s * s * base.mu3,
            mu4: s * s * s * s * base.mu4,
            exactness: Exactness::Analytic,
        })
    }

    /// One draw using the caller's RNG stream.
    pub fn draw_with<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.scale * base_draw(&self.family, rng) + self.shift
    }

    /// `count` deterministic draws from a fresh stream keyed by `seed`.
    pub fn sample(&self, count: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| self.draw_with(&mut rng)).collect()
    }
}

fn base_pdf(family: &Family, x: f64) -> f64 {
    match *family {
        Family::Weibull { rate: a, shape: b } => {
            if x < 0.0 {
                0.0
            } else if x == 0.0 {
                // b < 1 diverges at the origin, b = 1 is the exponential.
                match b.partial_cmp(&1.0) {
                    Some(std::cmp::Ordering::Greater) => 0.0,
                    Some(std::cmp::Ordering::Equal) => a,
                    _ => f64::INFINITY,
                }
            } else {
                // Log-space keeps x^(b−1) and e^(−a·x^b) from over- and
                // underflowing separately for large b.
                (a.ln() + b.ln() + (b - 1.0) * x.ln() - a * x.powf(b)).exp()
            }
        }
        Family::FisherF { d1: m, d2: n } => {
            if x < 0.0 {
                0.0
            } else if x == 0.0 {
                match m.partial_cmp(&2.0) {
                    Some(std::cmp::Ordering::Greater) => 0.0,
                    Some(std::cmp::Ordering::Equal) => 1.0,
                    _ => f64::INFINITY,
                }
            } else {
                let hm = 0.5 * m;
                let hn = 0.5 * n;
                let ln_norm = ln_gamma(hm + hn) - ln_gamma(hm) - ln_gamma(hn);
                (ln_norm + hm * (m / n).ln() + (hm - 1.0) * x.ln()
                    - (hm + hn) * (m * x / n).ln_1p())
                .exp()
            }
        }
        Family::Normal { mean, sd } => {
            let t = (x - mean) / sd;
            (-0.5 * t * t).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
        }
        Family::LogNormal { log_mean, log_sd } => {
            if x <= 0.0 {
                0.0
            } else {
                let t = (x.ln() - log_mean) / log_sd;
                (-0.5 * t * t).exp() / (x * log_sd * (2.0 * std::f64::consts::PI).sqrt())
            }
        }
        Family::Gamma { shape: k, rate } => {
            if x < 0.0 {
                0.0
            } else if x == 0.0 {
                match k.partial_cmp(&1.0) {
                    Some(std::cmp::Ordering::Greater) => 0.0,
                    Some(std::cmp::Ordering::Equal) => rate,
                    _ => f64::INFINITY,
                }
            } else {
                (k * rate.ln() + (k - 1.0) * x.ln() - rate * x - ln_gamma(k)).exp()
            }
        }
        Family::Uniform { lower, upper } => {
            if x < lower || x > upper {
                0.0
            } else {
                1.0 / (upper - lower)
            }
        }
    }
}

fn base_cdf(family: &Family, x: f64) -> f64 {
    match *family {
        Family::Weibull { rate: a, shape: b } => {
            if x <= 0.0 {
                0.0
            } else {
                -(-a * x.powf(b)).exp_m1()
            }
        }
        Family::FisherF { d1: m, d2: n } => {
            if x <= 0.0 {
                0.0
            } else {
                beta_reg(0.5 * m, 0.5 * n, m * x / (m * x + n))
            }
        }
        Family::Normal { mean, sd } => {
            0.5 * (1.0 + erf((x - mean) / (sd * std::f64::consts::SQRT_2)))
        }
        Family::LogNormal { log_mean, log_sd } => {
            if x <= 0.0 {
                0.0
            } else {
                0.5 * (1.0 + erf((x.ln() - log_mean) / (log_sd * std::f64::consts::SQRT_2)))
            }
        }
        Family::Gamma { shape: k, rate } => {
            if x <= 0.0 {
                0.0
            } else {
                gamma_lr(k, rate * x)
            }
        }
        Family::Uniform { lower, upper } => ((x - lower) / (upper - lower)).clamp(0.0, 1.0),
    }
}

fn base_inverse_cdf(family: &Family, u: f64) -> Result<f64> {
    match *family {
        Family::Weibull { rate: a, shape: b } => {
            // Invert 1 − e^(−a·x^b): x = (−ln(1−u)/a)^(1/b).
            Ok(((-(-u).ln_1p()) / a).powf(1.0 / b))
        }
        Family::Uniform { lower, upper } => Ok(lower + u * (upper - lower)),
        Family::Normal { mean, sd } => {
            Ok(mean + sd * std::f64::consts::SQRT_2 * erf_inv(2.0 * u - 1.0))
        }
        Family::LogNormal { log_mean, log_sd } => {
            Ok((log_mean + log_sd * std::f64::consts::SQRT_2 * erf_inv(2.0 * u - 1.0)).exp())
        }
        Family::Gamma { .. } | Family::FisherF { .. } => invert_cdf_numeric(family, u),
    }
}

/// Bracketed root-find on cdf(x) − u for families without a closed-form
/// quantile. The upper bracket starts near the bulk of the mass and is
/// doubled until it encloses u.
fn invert_cdf_numeric(family: &Family, u: f64) -> Result<f64> {
    if u == 0.0 {
        return Ok(0.0);
    }
    let mut hi = match *family {
        Family::Gamma { shape, rate } => (shape / rate).max(1.0),
        Family::FisherF { .. } => 1.0,
        _ => 1.0,
    };
    let mut guard = 0;
    while base_cdf(family, hi) <= u {
        hi *= 2.0;
        guard += 1;
        if guard > 200 {
            return Err(Error::RootNotConverged {
                residual: base_cdf(family, hi) - u,
            });
        }
    }
    find_root_bracketed(|x| base_cdf(family, x) - u, 0.0, hi, INVERSE_CDF_TOL)
}

fn base_raw_mean(family: &Family) -> Result<f64> {
    match *family {
        Family::Weibull { rate: a, shape: b } => Ok(a.powf(-1.0 / b) * ln_gamma(1.0 + 1.0 / b).exp()),
        Family::FisherF { d2: n, .. } => {
            if n <= 2.0 {
                Err(Error::NonexistentMoment {
                    family: "fisher_f",
                    order: 1,
                })
            } else {
                Ok(n / (n - 2.0))
            }
        }
        Family::Normal { mean, .. } => Ok(mean),
        Family::LogNormal { log_mean, log_sd } => Ok((log_mean + 0.5 * log_sd * log_sd).exp()),
        Family::Gamma { shape, rate } => Ok(shape / rate),
        Family::Uniform { lower, upper } => Ok(0.5 * (lower + upper)),
    }
}

fn base_variance(family: &Family) -> Result<f64> {
    match *family {
        Family::Weibull { rate: a, shape: b } => {
            // μ²·(Γ(1+2/b)/Γ²(1+1/b) − 1) through expm1: direct
            // subtraction loses the variance entirely for b ≳ 10³ where
            // the ratio is 1 + O(b⁻²).
            let mean = a.powf(-1.0 / b) * ln_gamma(1.0 + 1.0 / b).exp();
            let ratio = (ln_gamma(1.0 + 2.0 / b) - 2.0 * ln_gamma(1.0 + 1.0 / b)).exp_m1();
            Ok(mean * mean * ratio)
        }
        Family::FisherF { d1: m, d2: n } => {
            if n <= 4.0 {
                Err(Error::NonexistentMoment {
                    family: "fisher_f",
                    order: 2,
                })
            } else {
                Ok(2.0 * n * n * (m + n - 2.0) / (m * (n - 2.0) * (n - 2.0) * (n - 4.0)))
            }
        }
        Family::Normal { sd, .. } => Ok(sd * sd),
        Family::LogNormal { log_mean, log_sd } => {
            let mean = (log_mean + 0.5 * log_sd * log_sd).exp();
            Ok(mean * mean * (log_sd * log_sd).exp_m1())
        }
        Family::Gamma { shape, rate } => Ok(shape / (rate * rate)),
        Family::Uniform { lower, upper } => {
            let w = upper - lower;
            Ok(w * w / 12.0)
        }
    }
}

fn base_moments(family: &Family) -> Result<MomentSet> {
    let (mean, variance, mu3, mu4) = match *family {
        Family::Weibull { rate: a, shape: b } => {
            let mean = a.powf(-1.0 / b) * ln_gamma(1.0 + 1.0 / b).exp();
            // Normalized raw moments r_k = E[X^k]/μ^k from Γ-ratio logs;
            // expm1 keeps r_k − 1 accurate when b is large and every
            // ratio is within rounding of 1.
            let lg1 = ln_gamma(1.0 + 1.0 / b);
            let e = |k: f64| (ln_gamma(1.0 + k / b) - k * lg1).exp_m1();
            let (e2, e3, e4) = (e(2.0), e(3.0), e(4.0));
            // Central moments from r_k: μ₂/μ² = r₂−1, μ₃/μ³ = r₃−3r₂+2,
            // μ₄/μ⁴ = r₄−4r₃+6r₂−3; rewritten in the (r_k − 1) terms.
            let c2 = e2;
            let c3 = e3 - 3.0 * e2;
            let c4 = e4 - 4.0 * e3 + 6.0 * e2;
            (
                mean,
                mean * mean * c2,
                mean * mean * mean * c3,
                mean * mean * mean * mean * c4,
            )
        }
        Family::FisherF { d1: m, d2: n } => {
            for (order, bound) in [(1u32, 2.0), (2, 4.0), (3, 6.0), (4, 8.0)] {
                if n <= bound {
                    return Err(Error::NonexistentMoment {
                        family: "fisher_f",
                        order,
                    });
                }
            }
            // E[X^r] = (n/m)^r · Γ(m/2+r)Γ(n/2−r) / (Γ(m/2)Γ(n/2)).
            let (hm, hn) = (0.5 * m, 0.5 * n);
            let ln_raw = |r: f64| {
                r * (n / m).ln() + ln_gamma(hm + r) - ln_gamma(hm) + ln_gamma(hn - r)
                    - ln_gamma(hn)
            };
            let mean = ln_raw(1.0).exp();
            let rk = |k: f64| (ln_raw(k) - k * ln_raw(1.0)).exp();
            let (r2, r3, r4) = (rk(2.0), rk(3.0), rk(4.0));
            (
                mean,
                mean * mean * (r2 - 1.0),
                mean * mean * mean * (r3 - 3.0 * r2 + 2.0),
                mean * mean * mean * mean * (r4 - 4.0 * r3 + 6.0 * r2 - 3.0),
            )
        }
        Family::Normal { mean, sd } => {
            let v = sd * sd;
            (mean, v, 0.0, 3.0 * v * v)
        }
        Family::LogNormal { log_mean, log_sd } => {
            // With ω = e^(σ²): r₂ = ω, r₃ = ω³, r₄ = ω⁶; factored forms
            // in (ω−1) avoid cancellation at small σ.
            let mean = (log_mean + 0.5 * log_sd * log_sd).exp();
            let om1 = (log_sd * log_sd).exp_m1(); // ω − 1
            let omega = om1 + 1.0;
            let c2 = om1;
            let c3 = om1 * om1 * (omega + 2.0);
            let c4 = om1 * om1
                * (omega * omega * (omega * omega + 2.0 * omega + 3.0) - 3.0);
            (
                mean,
                mean * mean * c2,
                mean * mean * mean * c3,
                mean * mean * mean * mean * c4,
            )
        }
        Family::Gamma { shape: k, rate } => (
            k / rate,
            k / (rate * rate),
            2.0 * k / (rate * rate * rate),
            (3.0 * k * k + 6.0 * k) / (rate * rate * rate * rate),
        ),
        Family::Uniform { lower, upper } => {
            let w = upper - lower;
            (
                0.5 * (lower + upper),
                w * w / 12.0,
                0.0,
                w * w * w * w / 80.0,
            )
        }
    };
    Ok(MomentSet {
        mean,
        variance,
        mu3,
        mu4,
        exactness: Exactness::Analytic,
    })
}

fn base_draw<R: Rng + ?Sized>(family: &Family, rng: &mut R) -> f64 {
    match *family {
        Family::Weibull { rate: a, shape: b } => {
            let u: f64 = rng.random();
            ((-(-u).ln_1p()) / a).powf(1.0 / b)
        }
        Family::FisherF { d1: m, d2: n } => {
            // Ratio of scaled chi-squares; chi²(d) is Gamma(d/2, scale 2).
            // Quantile-free, so degrees where the inverse CDF is awkward
            // cost nothing extra.
            let g1 = rand_distr::Gamma::new(0.5 * m, 2.0).expect("validated params");
            let g2 = rand_distr::Gamma::new(0.5 * n, 2.0).expect("validated params");
            let num: f64 = rand_distr::Distribution::sample(&g1, rng) / m;
            let den: f64 = rand_distr::Distribution::sample(&g2, rng) / n;
            num / den
        }
        Family::Normal { mean, sd } => {
            let z: f64 = rng.sample(rand_distr::StandardNormal);
            mean + sd * z
        }
        Family::LogNormal { log_mean, log_sd } => {
            let z: f64 = rng.sample(rand_distr::StandardNormal);
            (log_mean + log_sd * z).exp()
        }
        Family::Gamma { shape, rate } => {
            let g = rand_distr::Gamma::new(shape, 1.0 / rate).expect("validated params");
            rand_distr::Distribution::sample(&g, rng)
        }
        Family::Uniform { lower, upper } => {
            let u: f64 = rng.random();
            lower + u * (upper - lower)
        }
    }
}

/// Weibull distribution with prescribed mean and coefficient of variation.
///
/// The shape `b` solves `Γ(1+2/b)/Γ²(1+1/b) = 1 + cov²` by a bracketed
/// root-find in log space; the result keeps the base at unit rate and puts
/// the mean into the affine scale, because the rate `a = (Γ(1+1/b)/mean)^b`
/// itself under- or overflows once `b` exceeds a few hundred (tiny cov).
pub fn weibull_from_mean_cov(mean: f64, cov: f64) -> Result<Distribution> {
    if !(mean.is_finite() && mean > 0.0) {
        return Err(Error::InvalidParameter {
            name: "mean",
            value: mean,
            reason: "must be a finite positive real",
        });
    }
    if !(cov > 0.0 && cov < 1.0) {
        return Err(Error::InvalidParameter {
            name: "cov",
            value: cov,
            reason: "must lie in (0, 1)",
        });
    }
    let target = (cov * cov).ln_1p();
    let residual = |b: f64| ln_gamma(1.0 + 2.0 / b) - 2.0 * ln_gamma(1.0 + 1.0 / b) - target;
    // residual(1) = ln 2 − ln(1+cov²) > 0 for cov < 1, and residual → −target
    // as b → ∞, so doubling the upper end always brackets the root.
    let lo = 1.0;
    let mut hi = 2.0;
    while residual(hi) > 0.0 {
        hi *= 2.0;
        if hi > 1e9 {
            return Err(Error::NoBracket { lo, hi });
        }
    }
    let b = find_root_bracketed(residual, lo, hi, 1e-13)?;
    let unit_mean = ln_gamma(1.0 + 1.0 / b).exp();
    Distribution::scaled(
        Family::Weibull {
            rate: 1.0,
            shape: b,
        },
        mean / unit_mean,
    )
}

fn default_scale() -> f64 {
    1.0
}

/// Plain-data description of a [`Distribution`], the form used in study
/// files and on the command line: `{family, params, scale?, shift?}` with
/// family keys `weibull` (a, b), `fisher_f` (m, n), `normal` (mean, sd),
/// `log_normal` (log_mean, log_sd), `gamma` (shape, rate) and `uniform`
/// (lower, upper).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistributionConfig {
    pub family: String,
    pub params: BTreeMap<String, f64>,
    #[serde(default = "default_scale")]
    pub scale: f64,
    #[serde(default)]
    pub shift: f64,
}

impl DistributionConfig {
    pub fn build(&self) -> Result<Distribution> {
        let expected: &[&str] = match self.family.as_str() {
            "weibull" => &["a", "b"],
            "fisher_f" => &["m", "n"],
            "normal" => &["mean", "sd"],
            "log_normal" => &["log_mean", "log_sd"],
            "gamma" => &["shape", "rate"],
            "uniform" => &["lower", "upper"],
            other => {
                return Err(Error::Configuration(format!(
                    "unknown distribution family `{other}` (expected weibull, fisher_f, \
                     normal, log_normal, gamma or uniform)"
                )))
            }
        };
        for key in self.params.keys() {
            if !expected.contains(&key.as_str()) {
                return Err(Error::Configuration(format!(
                    "family `{}` does not take parameter `{key}` (expected {})",
                    self.family,
                    expected.join(", ")
                )));
            }
        }
        let get = |key: &str| -> Result<f64> {
            self.params.get(key).copied().ok_or_else(|| {
                Error::Configuration(format!(
                    "family `{}` requires parameter `{key}`",
                    self.family
                ))
            })
        };
        let family = match self.family.as_str() {
            "weibull" => Family::Weibull {
                rate: get("a")?,
                shape: get("b")?,
            },
            "fisher_f" => Family::FisherF {
                d1: get("m")?,
                d2: get("n")?,
            },
            "normal" => Family::Normal {
                mean: get("mean")?,
                sd: get("sd")?,
            },
            "log_normal" => Family::LogNormal {
                log_mean: get("log_mean")?,
                log_sd: get("log_sd")?,
            },
            "gamma" => Family::Gamma {
                shape: get("shape")?,
                rate: get("rate")?,
            },
            "uniform" => Family::Uniform {
                lower: get("lower")?,
                upper: get("upper")?,
            },
            _ => unreachable!("family validated above"),
        };
        Distribution::transformed(family, self.scale, self.shift)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{integrate_adaptive, integrate_semi_infinite, pairwise_sum};

    fn weibull(a: f64, b: f64) -> Distribution {
        Distribution::new(Family::Weibull { rate: a, shape: b }).unwrap()
    }

    fn fisher(m: f64, n: f64) -> Distribution {
        Distribution::new(Family::FisherF { d1: m, d2: n }).unwrap()
    }

    #[test]
    fn weibull_pdf_matches_hand_values() {
        let d = weibull(3.0, 5.0);
        // a·b·x^(b−1)·e^(−a·x^b) at x=1: 15·e⁻³.
        let expected = 15.0 * (-3.0_f64).exp();
        assert!((d.pdf(1.0) - expected).abs() <= 1e-12 * expected);
        assert_eq!(d.pdf(-1.0), 0.0);
        assert_eq!(d.pdf(f64::INFINITY), 0.0);
    }

    #[test]
    fn uniform_pdf_is_flat() {
        let d = Distribution::new(Family::Uniform {
            lower: 0.0,
            upper: 2.0,
        })
        .unwrap();
        assert_eq!(d.pdf(1.0), 0.5);
        assert_eq!(d.pdf(2.5), 0.0);
    }

    #[test]
    fn degenerate_families_are_rejected() {
        assert!(matches!(
            Distribution::new(Family::Normal {
                mean: 5.0,
                sd: 0.0
            }),
            Err(Error::InvalidParameter { name: "sd", .. })
        ));
        assert!(matches!(
            Distribution::new(Family::Uniform {
                lower: 1.0,
                upper: 1.0
            }),
            Err(Error::InvalidParameter { name: "upper", .. })
        ));
        assert!(matches!(
            Distribution::new(Family::Weibull {
                rate: -1.0,
                shape: 2.0
            }),
            Err(Error::InvalidParameter { name: "a", .. })
        ));
        assert!(Distribution::scaled(
            Family::Normal {
                mean: 0.0,
                sd: 1.0
            },
            0.0
        )
        .is_err());
    }

    #[test]
    fn scaled_f_distribution_moments() {
        // F(25,100) stretched by 70: mean 500/7 ≈ 71.43, sd ≈ 22.87.
        let d = Distribution::scaled(Family::FisherF { d1: 25.0, d2: 100.0 }, 70.0).unwrap();
        let m = d.moments().unwrap();
        assert!((m.mean - 71.4286).abs() <= 0.05, "mean {}", m.mean);
        assert!((m.sd() - 22.8683).abs() <= 0.05, "sd {}", m.sd());
    }

    #[test]
    fn reversed_f_distribution_moments() {
        let m = fisher(100.0, 25.0).moments().unwrap();
        assert!((m.mean - 25.0 / 23.0).abs() <= 1e-12);
        // 2n²(m+n−2)/(m(n−2)²(n−4)) at (100, 25) = 153750/1110900.
        let var = 153750.0 / 1110900.0;
        assert!((m.variance - var).abs() <= 1e-12, "variance {}", m.variance);
    }

    #[test]
    fn f_distribution_missing_moments_name_the_order() {
        assert!(matches!(
            fisher(10.0, 2.0).mean(),
            Err(Error::NonexistentMoment { order: 1, .. })
        ));
        assert!(matches!(
            fisher(10.0, 4.0).variance(),
            Err(Error::NonexistentMoment { order: 2, .. })
        ));
        assert!(matches!(
            fisher(10.0, 4.0).moments(),
            Err(Error::NonexistentMoment { order: 2, .. })
        ));
        assert!(matches!(
            fisher(10.0, 7.0).moments(),
            Err(Error::NonexistentMoment { order: 4, .. })
        ));
        assert!(fisher(10.0, 7.0).variance().is_ok());
    }

    #[test]
    fn gamma_and_lognormal_and_uniform_moments() {
        let g = Distribution::new(Family::Gamma {
            shape: 2.0,
            rate: 3.0,
        })
        .unwrap()
        .moments()
        .unwrap();
        assert!((g.mean - 2.0 / 3.0).abs() <= 1e-15);
        assert!((g.variance - 2.0 / 9.0).abs() <= 1e-15);
        assert!((g.mu3 - 4.0 / 27.0).abs() <= 1e-15);
        assert!((g.mu4 - 24.0 / 81.0).abs() <= 1e-15);

        let u = Distribution::new(Family::Uniform {
            lower: 1.0,
            upper: 3.0,
        })
        .unwrap()
        .moments()
        .unwrap();
        assert!((u.mean - 2.0).abs() <= 1e-15);
        assert!((u.variance - 1.0 / 3.0).abs() <= 1e-15);
        assert_eq!(u.mu3, 0.0);
        assert!((u.mu4 - 0.2).abs() <= 1e-15);

        // LogNormal(0, 0.5): mean e^{1/8}, var e^{1/4}(e^{1/4}−1).
        let l = Distribution::new(Family::LogNormal {
            log_mean: 0.0,
            log_sd: 0.5,
        })
        .unwrap()
        .moments()
        .unwrap();
        let omega = (0.25_f64).exp();
        let mean = (0.125_f64).exp();
        assert!((l.mean - mean).abs() <= 1e-14);
        assert!((l.variance - mean * mean * (omega - 1.0)).abs() <= 1e-14);
    }

    #[test]
    fn inverse_cdf_closed_forms() {
        let d = weibull(3.0, 5.0);
        assert_eq!(d.inverse_cdf(0.0).unwrap(), 0.0);
        // u = 1 − e⁻³ maps back to x = 1.
        let u = -(-3.0_f64).exp_m1();
        assert!((d.inverse_cdf(u).unwrap() - 1.0).abs() <= 1e-12);

        let uni = Distribution::new(Family::Uniform {
            lower: 2.0,
            upper: 4.0,
        })
        .unwrap();
        assert_eq!(uni.inverse_cdf(0.5).unwrap(), 3.0);

        assert!(matches!(
            d.inverse_cdf(1.0),
            Err(Error::Domain { name: "u", .. })
        ));
        assert!(d.inverse_cdf(-0.1).is_err());
    }

    fn grid() -> Vec<Distribution> {
        vec![
            weibull(3.0, 5.0),
            weibull(1.0, 2.0),
            weibull(0.5, 1.5),
            weibull(2.0, 30.0),
            fisher(25.0, 100.0),
            fisher(100.0, 25.0),
            fisher(5.0, 9.0),
            Distribution::new(Family::Normal {
                mean: 0.0,
                sd: 1.0,
            })
            .unwrap(),
            Distribution::new(Family::Normal {
                mean: -3.0,
                sd: 0.5,
            })
            .unwrap(),
            Distribution::new(Family::LogNormal {
                log_mean: 0.0,
                log_sd: 1.0,
            })
            .unwrap(),
            Distribution::new(Family::LogNormal {
                log_mean: 3.4,
                log_sd: 0.1,
            })
            .unwrap(),
            Distribution::new(Family::Gamma {
                shape: 2.0,
                rate: 3.0,
            })
            .unwrap(),
            Distribution::new(Family::Gamma {
                shape: 0.8,
                rate: 1.0,
            })
            .unwrap(),
            Distribution::new(Family::Uniform {
                lower: -1.0,
                upper: 3.0,
            })
            .unwrap(),
            Distribution::scaled(Family::FisherF { d1: 25.0, d2: 100.0 }, 70.0).unwrap(),
            Distribution::transformed(Family::Weibull { rate: 1.0, shape: 4.0 }, 2.5, -1.0)
                .unwrap(),
        ]
    }

    #[test]
    fn pdf_normalizes_across_the_grid() {
        for d in grid() {
            let sup = d.support();
            let integral = if sup.lower >= 0.0 && sup.upper.is_infinite() && d.shift() == 0.0 {
                integrate_semi_infinite(move |x| d.pdf(x), 1e-9).unwrap().value
            } else if sup.upper.is_finite() && sup.lower.is_finite() {
                integrate_adaptive(move |x| d.pdf(x), sup.lower, sup.upper, 1e-9)
                    .unwrap()
                    .value
            } else {
                // Unbounded tails: ±15σ holds everything but ~1e−50 mass.
                let m = d.moments().unwrap();
                let (lo, hi) = (m.mean - 15.0 * m.sd(), m.mean + 15.0 * m.sd());
                integrate_adaptive(move |x| d.pdf(x), lo, hi, 1e-9).unwrap().value
            };
            assert!(
                (integral - 1.0).abs() <= 1e-8,
                "pdf of {d} integrates to {integral}"
            );
        }
    }

    #[test]
    fn quantile_cdf_identity_across_the_grid() {
        for d in grid() {
            for i in 0..1000 {
                let u = (i as f64 + 0.5) / 1000.0;
                let x = d.inverse_cdf(u).unwrap();
                let back = d.cdf(x);
                assert!(
                    (back - u).abs() <= 1e-8,
                    "cdf(icdf({u})) = {back} for {d}"
                );
            }
        }
    }

    #[test]
    fn moments_respect_scale_and_shift() {
        for d in grid() {
            let base = Distribution::new(d.family()).unwrap();
            let (s, t) = (d.scale(), d.shift());
            match (d.moments(), base.moments()) {
                (Ok(m), Ok(mb)) => {
                    assert!((m.mean - (s * mb.mean + t)).abs() <= 1e-12 * (1.0 + m.mean.abs()));
                    assert!(
                        (m.variance - s * s * mb.variance).abs()
                            <= 1e-12 * (1.0 + m.variance.abs())
                    );
                    assert!(
                        (m.mu3 - s * s * s * mb.mu3).abs() <= 1e-12 * (1.0 + m.mu3.abs())
                    );
                    assert!(
                        (m.mu4 - s * s * s * s * mb.mu4).abs() <= 1e-12 * (1.0 + m.mu4.abs())
                    );
                }
                (Err(_), Err(_)) => {}
                (a, b) => panic!("transform changed moment existence: {a:?} vs {b:?}"),
            }
        }
    }

    #[test]
    fn central_moment_inequality_holds_on_grid() {
        for d in grid() {
            if let Ok(m) = d.moments() {
                assert!(m.variance >= 0.0);
                assert!(
                    m.mu4 >= m.variance * m.variance * (1.0 - 1e-10),
                    "mu4 {} < var² {} for {d}",
                    m.mu4,
                    m.variance * m.variance
                );
            }
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        for d in grid() {
            let one = d.sample(3, 42);
            let two = d.sample(3, 42);
            assert_eq!(one, two, "seeded draws differ for {d}");
        }
    }

    #[test]
    fn sample_means_match_analytic_within_standard_error() {
        let n = 1_000_000_usize;
        for (seed, d) in [
            (11_u64, weibull(3.0, 5.0)),
            (12, fisher(25.0, 100.0)),
            (
                13,
                Distribution::new(Family::Normal {
                    mean: 70.0,
                    sd: 22.9,
                })
                .unwrap(),
            ),
            (
                14,
                Distribution::new(Family::LogNormal {
                    log_mean: 0.5,
                    log_sd: 0.4,
                })
                .unwrap(),
            ),
            (
                15,
                Distribution::new(Family::Gamma {
                    shape: 2.0,
                    rate: 3.0,
                })
                .unwrap(),
            ),
            (
                16,
                Distribution::new(Family::Uniform {
                    lower: 1.0,
                    upper: 4.0,
                })
                .unwrap(),
            ),
        ] {
            let m = d.moments().unwrap();
            let xs = d.sample(n, seed);
            let mean = pairwise_sum(&xs) / n as f64;
            let se = m.sd() / (n as f64).sqrt();
            assert!(
                (mean - m.mean).abs() <= 3.0 * se,
                "{d}: sample mean {mean} vs {} (3·SE = {})",
                m.mean,
                3.0 * se
            );
        }
    }

    #[test]
    fn matched_weibull_sample_mean_converges() {
        let d = weibull_from_mean_cov(70.0, 0.1).unwrap();
        let n = 1_000_000_usize;
        let xs = d.sample(n, 7);
        let mean = pairwise_sum(&xs) / n as f64;
        let se = 7.0 / (n as f64).sqrt();
        assert!((mean - 70.0).abs() <= 3.0 * se, "mean {mean}");
    }

    #[test]
    fn f_sample_variance_matches_analytic() {
        let d = fisher(25.0, 100.0);
        let m = d.moments().unwrap();
        let n = 1_000_000_usize;
        let xs = d.sample(n, 21);
        let mean = pairwise_sum(&xs) / n as f64;
        let sq: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
        let var = pairwise_sum(&sq) / (n as f64 - 1.0);
        // SE of the sample variance from the fourth moment:
        // Var(s²) ≈ (μ₄ − μ₂²)/N.
        let se = ((m.mu4 - m.variance * m.variance) / n as f64).sqrt();
        assert!(
            (var - m.variance).abs() <= 3.0 * se,
            "variance {var} vs {} (3·SE = {})",
            m.variance,
            3.0 * se
        );
    }

    #[test]
    fn higher_central_moments_match_simulation() {
        // The SOFM variance leans on μ₃ and μ₄; check the closed forms
        // against big-sample estimates with plug-in standard errors
        // (asymptotic variance of central-moment estimators uses moments
        // up to order 8, estimated from the same sample).
        let n = 10_000_000_usize;
        for (seed, d) in [
            (31_u64, weibull(3.0, 5.0)),
            (
                32,
                Distribution::new(Family::Normal {
                    mean: 5.0,
                    sd: 2.0,
                })
                .unwrap(),
            ),
            (
                33,
                Distribution::new(Family::LogNormal {
                    log_mean: 0.5,
                    log_sd: 0.4,
                })
                .unwrap(),
            ),
            (
                34,
                Distribution::new(Family::Gamma {
                    shape: 3.0,
                    rate: 2.0,
                })
                .unwrap(),
            ),
            (
                35,
                Distribution::new(Family::Uniform {
                    lower: 1.0,
                    upper: 4.0,
                })
                .unwrap(),
            ),
            (36, fisher(25.0, 100.0)),
        ] {
            let m = d.moments().unwrap();
            let xs = d.sample(n, seed);
            let nf = n as f64;
            let mean = pairwise_sum(&xs) / nf;
            let central = |k: u32| {
                let pow: Vec<f64> = xs.iter().map(|x| (x - mean).powi(k as i32)).collect();
                pairwise_sum(&pow) / nf
            };
            let (m2, m3, m4) = (central(2), central(3), central(4));
            let (m5, m6, m8) = (central(5), central(6), central(8));
            // Asymptotic variances of the central-moment estimators.
            let var_m3 = (m6 - m3 * m3 - 6.0 * m2 * m4 + 9.0 * m2 * m2 * m2) / nf;
            let var_m4 =
                (m8 - m4 * m4 - 8.0 * m3 * m5 + 16.0 * m2 * m3 * m3) / nf;
            assert!(
                (m3 - m.mu3).abs() <= 3.0 * var_m3.sqrt(),
                "{d}: mu3 {m3} vs {} (3·SE = {})",
                m.mu3,
                3.0 * var_m3.sqrt()
            );
            assert!(
                (m4 - m.mu4).abs() <= 3.0 * var_m4.sqrt(),
                "{d}: mu4 {m4} vs {} (3·SE = {})",
                m.mu4,
                3.0 * var_m4.sqrt()
            );
        }
    }

    #[test]
    fn higher_central_moments_match_quadrature() {
        for d in [
            weibull(3.0, 5.0),
            Distribution::new(Family::Gamma {
                shape: 2.0,
                rate: 3.0,
            })
            .unwrap(),
        ] {
            let m = d.moments().unwrap();
            let mu = m.mean;
            let q3 = integrate_semi_infinite(
                move |x| (x - mu) * (x - mu) * (x - mu) * d.pdf(x),
                1e-10,
            )
            .unwrap()
            .value;
            let q4 = integrate_semi_infinite(
                move |x| (x - mu) * (x - mu) * (x - mu) * (x - mu) * d.pdf(x),
                1e-10,
            )
            .unwrap()
            .value;
            assert!(
                (q3 - m.mu3).abs() <= 1e-8 * m.mu3.abs().max(1.0),
                "mu3 quadrature {q3} vs analytic {} for {d}",
                m.mu3
            );
            assert!(
                (q4 - m.mu4).abs() <= 1e-8 * m.mu4,
                "mu4 quadrature {q4} vs analytic {} for {d}"
                , m.mu4
            );
        }
    }

    #[test]
    fn weibull_fit_round_trips_mean_and_cov() {
        let tiny = weibull_from_mean_cov(30.0, 1e-4).unwrap();
        let m = tiny.moments().unwrap();
        assert!((m.mean - 30.0).abs() <= 1e-6, "mean {}", m.mean);

        for (mean, cov) in [(70.0, 0.4), (70.0, 0.025), (30.0, 0.15), (16.0, 0.9)] {
            let d = weibull_from_mean_cov(mean, cov).unwrap();
            let m = d.moments().unwrap();
            assert!(
                (m.mean - mean).abs() <= 1e-8 * mean,
                "mean {} for cov {cov}",
                m.mean
            );
            let got_cov = m.sd() / m.mean;
            assert!(
                (got_cov - cov).abs() <= 1e-8 * cov,
                "cov {got_cov} vs {cov}"
            );
        }

        assert!(weibull_from_mean_cov(70.0, 0.0).is_err());
        assert!(weibull_from_mean_cov(70.0, 1.0).is_err());
        assert!(weibull_from_mean_cov(0.0, 0.1).is_err());
    }

    #[test]
    fn config_records_build_and_reject() {
        let json = r#"{"family":"weibull","params":{"a":3.0,"b":5.0}}"#;
        let cfg: DistributionConfig = serde_json::from_str(json).unwrap();
        let d = cfg.build().unwrap();
        assert_eq!(d.scale(), 1.0);
        assert_eq!(d.shift(), 0.0);
        assert!((d.pdf(1.0) - 15.0 * (-3.0_f64).exp()).abs() <= 1e-12);

        let scaled = r#"{"family":"fisher_f","params":{"m":25.0,"n":100.0},"scale":70.0}"#;
        let d: DistributionConfig = serde_json::from_str(scaled).unwrap();
        let d = d.build().unwrap();
        assert!((d.moments().unwrap().mean - 71.4286).abs() <= 0.05);

        let unknown = r#"{"family":"beta","params":{}}"#;
        let cfg: DistributionConfig = serde_json::from_str(unknown).unwrap();
        assert!(matches!(cfg.build(), Err(Error::Configuration(_))));

        let extra = r#"{"family":"normal","params":{"mean":0.0,"sd":1.0,"skew":2.0}}"#;
        let cfg: DistributionConfig = serde_json::from_str(extra).unwrap();
        assert!(matches!(cfg.build(), Err(Error::Configuration(_))));

        let missing = r#"{"family":"gamma","params":{"shape":1.0}}"#;
        let cfg: DistributionConfig = serde_json::from_str(missing).unwrap();
        assert!(matches!(cfg.build(), Err(Error::Configuration(_))));
    }

    #[test]
    fn support_reflects_transform() {
        let d = Distribution::transformed(Family::Weibull { rate: 1.0, shape: 2.0 }, 2.0, -3.0)
            .unwrap();
        let s = d.support();
        assert_eq!(s.lower, -3.0);
        assert_eq!(s.upper, f64::INFINITY);
    }
}
