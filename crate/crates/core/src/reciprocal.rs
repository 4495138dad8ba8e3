//! First and second moments of `Z = 1/X`.
//!
//! The reciprocal estimator needs `μ_Z` and `cov(Zᵢ, Zⱼ)`, and this
//! module supplies them by four routes in decreasing order of authority:
//! an exact distributional pair where one is known (the F distribution:
//! `X ~ F(m,n)` implies `1/X ~ F(n,m)`), adaptive quadrature against the
//! density, the empirical estimator over measured realizations, and
//! sampling followed by the empirical estimator.
//!
//! A density that is positive at 0 makes `E[1/X]` diverge, and one that is
//! positive on any interval left of 0 makes it undefined; supports
//! reaching below zero are therefore rejected outright, and divergent
//! integrals surface as quadrature failures carrying the partial value.

use nalgebra::{DMatrix, DVector};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::distributions::{Distribution, Family};
use crate::error::{Error, Result};
use crate::numerics::integrate_semi_infinite;
use crate::propagation::{sample_mean_cov, RandomInput};

/// Relative tolerance for the reciprocal-moment integrals.
pub const RECIPROCAL_QUADRATURE_TOL: f64 = 1e-9;

/// How a [`ReciprocalMoments`] value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentSource {
    /// Closed-form moments of the exact reciprocal distribution.
    AnalyticPair,
    /// Numerical integration against the density of X.
    Quadrature,
    /// Empirical estimator over supplied realizations.
    Empirical,
    /// Empirical estimator over freshly drawn realizations.
    Sampled,
}

impl MomentSource {
    pub fn key(&self) -> &'static str {
        match self {
            MomentSource::AnalyticPair => "analytic_pair",
            MomentSource::Quadrature => "quadrature",
            MomentSource::Empirical => "empirical",
            MomentSource::Sampled => "sampled",
        }
    }
}

/// Numerical context for a [`ReciprocalMoments`]: how hard the integrals
/// were (quadrature routes) or how much data went in (empirical routes).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct ReciprocalDiagnostics {
    /// Summed absolute residual of the moment integrals.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quadrature_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_count: Option<u64>,
}

/// Mean vector and covariance of the reciprocal vector `Z = 1/X`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReciprocalMoments {
    pub mean_z: DVector<f64>,
    pub cov_z: DMatrix<f64>,
    pub source: MomentSource,
    pub diagnostics: ReciprocalDiagnostics,
}

impl ReciprocalMoments {
    pub fn dimension(&self) -> usize {
        self.mean_z.len()
    }
}

impl Serialize for ReciprocalMoments {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let n = self.dimension();
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| self.cov_z[(i, j)]).collect())
            .collect();
        let mut st = serializer.serialize_struct("ReciprocalMoments", 4)?;
        st.serialize_field("mean_z", self.mean_z.as_slice())?;
        st.serialize_field("cov_z", &rows)?;
        st.serialize_field("source", self.source.key())?;
        st.serialize_field("diagnostics", &self.diagnostics)?;
        st.end()
    }
}

fn require_nonnegative_support(dist: &Distribution) -> Result<()> {
    let s = dist.support();
    if s.lower < 0.0 {
        Err(Error::UnsupportedSupport(format!(
            "reciprocal moments need nonnegative support, but {dist} lives on \
             [{}, {}]",
            s.lower, s.upper
        )))
    } else {
        Ok(())
    }
}

/// Density of `Z = 1/X` as a function handle: `z ↦ (1/z²)·f_X(1/z)`.
pub fn reciprocal_pdf(dist: &Distribution) -> Result<impl Fn(f64) -> f64> {
    require_nonnegative_support(dist)?;
    let dist = *dist;
    Ok(move |z: f64| {
        if z <= 0.0 {
            return 0.0;
        }
        let fx = dist.pdf(1.0 / z);
        // f decaying to zero must not be turned into 0·∞ by the z⁻²
        // Jacobian as z → 0.
        if fx == 0.0 {
            0.0
        } else {
            fx / (z * z)
        }
    })
}

/// Reciprocal mean and variance of a scalar distribution by adaptive
/// quadrature at relative tolerance [`RECIPROCAL_QUADRATURE_TOL`]:
///
/// `μ_Z = ∫₀^∞ (1/z)·f_X(1/z) dz`,  `σ²_Z = ∫₀^∞ f_X(1/z) dz − μ_Z²`.
///
/// Both integrands are rescaled so the peak sits near 1 — they
/// concentrate around the reciprocal of the bulk of X, which for a
/// low-spread input is a needle the initial grid would otherwise
/// straddle. Divergent moments (density positive at 0, or heavier) come
/// back as [`Error::QuadratureFailure`] with the partial value.
pub fn reciprocal_moments_quadrature(dist: &Distribution) -> Result<ReciprocalMoments> {
    require_nonnegative_support(dist)?;
    // The reciprocal density centers near 1/median(X); the median is
    // always defined and strictly positive here, unlike mean or mode.
    let median = dist.inverse_cdf(0.5)?;
    let z0 = 1.0 / median;
    let d = *dist;
    // Substituting z = z0·u: μ_Z = ∫ (1/u)·f(median/u) du (the z0 cancels)
    // and E[Z²] = z0·∫ f(median/u) du.
    let mean_integrand = move |u: f64| {
        let fx = d.pdf(median / u);
        if fx == 0.0 {
            0.0
        } else {
            fx / u
        }
    };
    let raw2_integrand = move |u: f64| d.pdf(median / u);
    let mean_q = integrate_semi_infinite(mean_integrand, RECIPROCAL_QUADRATURE_TOL)?;
    let raw2_q = integrate_semi_infinite(raw2_integrand, RECIPROCAL_QUADRATURE_TOL)?;
    let mean_z = mean_q.value;
    let raw2 = z0 * raw2_q.value;
    let var_z = raw2 - mean_z * mean_z;
    Ok(ReciprocalMoments {
        mean_z: DVector::from_element(1, mean_z),
        cov_z: DMatrix::from_element(1, 1, var_z),
        source: MomentSource::Quadrature,
        diagnostics: ReciprocalDiagnostics {
            quadrature_residual: Some(mean_q.abs_residual + z0 * raw2_q.abs_residual),
            sample_count: None,
        },
    })
}

/// The exact distribution of `1/X`, where a closed pair is implemented:
/// `X ~ s·F(m,n)` gives `1/X ~ (1/s)·F(n,m)`. Returns `None` for every
/// other family (and for shifted inputs, where no simple pair exists).
pub fn reciprocal_analytic(dist: &Distribution) -> Option<Distribution> {
    if dist.shift() != 0.0 {
        return None;
    }
    match dist.family() {
        Family::FisherF { d1, d2 } => Some(
            Distribution::scaled(Family::FisherF { d1: d2, d2: d1 }, 1.0 / dist.scale())
                .expect("reciprocal of a valid F is valid"),
        ),
        _ => None,
    }
}

/// Empirical reciprocal moments from joint realizations of `X` (one per
/// row): `z = 1/x` entrywise, then column means and the unbiased
/// (`1/(n−1)`) covariance.
pub fn empirical_reciprocal_moments(samples: &DMatrix<f64>) -> Result<ReciprocalMoments> {
    if samples.nrows() < 2 {
        return Err(Error::EstimatorUndefined {
            count: samples.nrows(),
            needed: 2,
        });
    }
    for j in 0..samples.ncols() {
        let mut sign = 0.0_f64;
        for i in 0..samples.nrows() {
            let x = samples[(i, j)];
            if x == 0.0 {
                return Err(Error::ZeroSampleEntry { row: i, column: j });
            }
            if sign == 0.0 {
                sign = x.signum();
            } else if x.signum() != sign {
                // A column straddling zero has no reciprocal moments at
                // any sample size: E[1/X] does not exist for the
                // underlying variable.
                return Err(Error::UnsupportedSupport(format!(
                    "column {j} mixes signs; reciprocal moments are undefined"
                )));
            }
        }
    }
    let z = samples.map(|x| 1.0 / x);
    let (mean_z, cov_z) = sample_mean_cov(&z);
    Ok(ReciprocalMoments {
        mean_z,
        cov_z,
        source: MomentSource::Empirical,
        diagnostics: ReciprocalDiagnostics {
            quadrature_residual: None,
            sample_count: Some(samples.nrows() as u64),
        },
    })
}

/// Reciprocal moments estimated from `count` fresh joint draws of the
/// input (this is the route that handles correlated marginals: the joint
/// draws carry the dependence into `cov(Z)`).
pub fn sampled_reciprocal_moments(
    input: &RandomInput,
    count: usize,
    seed: u64,
) -> Result<ReciprocalMoments> {
    if count < 2 {
        return Err(Error::EstimatorUndefined { count, needed: 2 });
    }
    let data = input.sample_matrix(count, seed)?;
    let mut out = empirical_reciprocal_moments(&data)?;
    out.source = MomentSource::Sampled;
    Ok(out)
}

/// Best scalar route for one distribution: the analytic pair where one
/// exists (including its verdict that a moment diverges), quadrature
/// otherwise.
pub fn auto_moments(dist: &Distribution) -> Result<ReciprocalMoments> {
    require_nonnegative_support(dist)?;
    if let Some(pair) = reciprocal_analytic(dist) {
        // A nonexistent pair moment means the true reciprocal moment
        // diverges; quadrature would only rediscover that slowly.
        let mean_z = pair.mean()?;
        let var_z = pair.variance()?;
        return Ok(ReciprocalMoments {
            mean_z: DVector::from_element(1, mean_z),
            cov_z: DMatrix::from_element(1, 1, var_z),
            source: MomentSource::AnalyticPair,
            diagnostics: ReciprocalDiagnostics::default(),
        });
    }
    reciprocal_moments_quadrature(dist)
}

/// Joint reciprocal moments of independent marginals: scalar routes per
/// coordinate, zero off-diagonal covariance (independence survives the
/// coordinatewise map). The source reports `AnalyticPair` only when every
/// coordinate had one, `Quadrature` otherwise.
pub fn independent_moments(dists: &[Distribution]) -> Result<ReciprocalMoments> {
    if dists.is_empty() {
        return Err(Error::Configuration("no distributions given".into()));
    }
    let d = dists.len();
    let mut mean_z = DVector::zeros(d);
    let mut cov_z = DMatrix::zeros(d, d);
    let mut all_analytic = true;
    let mut residual = 0.0;
    let mut any_residual = false;
    for (i, dist) in dists.iter().enumerate() {
        let m = auto_moments(dist)?;
        mean_z[i] = m.mean_z[0];
        cov_z[(i, i)] = m.cov_z[(0, 0)];
        match m.source {
            MomentSource::AnalyticPair => {}
            _ => all_analytic = false,
        }
        if let Some(r) = m.diagnostics.quadrature_residual {
            residual += r;
            any_residual = true;
        }
    }
    Ok(ReciprocalMoments {
        mean_z,
        cov_z,
        source: if all_analytic {
            MomentSource::AnalyticPair
        } else {
            MomentSource::Quadrature
        },
        diagnostics: ReciprocalDiagnostics {
            quadrature_residual: any_residual.then_some(residual),
            sample_count: None,
        },
    })
}
