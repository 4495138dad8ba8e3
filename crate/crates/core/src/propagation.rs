//! Estimators of the mean and standard deviation of `g(X)`.
//!
//! Four routes share the [`ObjectiveModel`]/[`RandomInput`] pair:
//! [`fosm`] linearises about the input mean, [`sofm`] adds diagonal
//! second-order corrections fed by third/fourth central moments,
//! [`rec_fosm`] linearises in the reciprocal variables `z = 1/x` (exact
//! whenever `g` is linear in `1/x`), and [`monte_carlo`] samples.
//!
//! `fosm` and `rec_fosm` both cost exactly one model value and one
//! gradient per estimate — the reciprocal route buys its accuracy from
//! where the expansion happens, not from extra evaluations.
//!
//! Everything here is deterministic: estimators are pure in
//! `(model, input, seed)`, and Monte Carlo accumulates with pairwise
//! summation on a single thread so a fixed seed reproduces bit-identical
//! estimates.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::distributions::Distribution;
use crate::error::{Error, Result};
use crate::numerics::{gradient as fd_gradient, hessian_diag as fd_hessian_diag, pairwise_sum};
use crate::reciprocal::{auto_moments, ReciprocalMoments};

/// What backs a [`RandomInput`]: parametric marginals (optionally tied by
/// a correlation matrix) or a matrix of measured realizations.
pub enum InputBacking {
    Distributions {
        marginals: Vec<Distribution>,
        /// Correlation over the Gaussian copula driving joint draws;
        /// `None` means independent.
        correlation: Option<DMatrix<f64>>,
    },
    Samples {
        /// One realization per row.
        data: DMatrix<f64>,
    },
}

/// Random inputs `X` with their first two joint moments.
pub struct RandomInput {
    backing: InputBacking,
    names: Vec<String>,
    means: DVector<f64>,
    covariance: DMatrix<f64>,
}

/// Column means and the unbiased (1/(n−1)) sample covariance, both via
/// pairwise summation so the reduction order is fixed.
pub(crate) fn sample_mean_cov(data: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let (rows, cols) = data.shape();
    let nf = rows as f64;
    let means = DVector::from_iterator(
        cols,
        (0..cols).map(|j| pairwise_sum(data.column(j).as_slice()) / nf),
    );
    let mut cov = DMatrix::zeros(cols, cols);
    let mut dev: Vec<f64> = Vec::with_capacity(rows);
    for i in 0..cols {
        for j in i..cols {
            dev.clear();
            dev.extend(
                data.column(i)
                    .iter()
                    .zip(data.column(j).iter())
                    .map(|(a, b)| (a - means[i]) * (b - means[j])),
            );
            let c = pairwise_sum(&dev) / (nf - 1.0);
            cov[(i, j)] = c;
            cov[(j, i)] = c;
        }
    }
    (means, cov)
}

impl RandomInput {
    /// Independent marginals; names default to `x0`, `x1`, ….
    pub fn independent(marginals: Vec<Distribution>) -> Result<Self> {
        Self::build_distribution_backed(marginals, None)
    }

    /// Marginals coupled through a Gaussian copula with the given
    /// correlation matrix (symmetric, unit diagonal, positive definite).
    ///
    /// The copula reproduces the requested correlation on the underlying
    /// Gaussian scores; the product-moment correlation of the transformed
    /// marginals approximates it (exactly for Normal marginals). The
    /// declared covariance uses `ρᵢⱼ·σᵢ·σⱼ`.
    pub fn correlated(marginals: Vec<Distribution>, correlation: DMatrix<f64>) -> Result<Self> {
        let d = marginals.len();
        if correlation.shape() != (d, d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: correlation.nrows(),
            });
        }
        for i in 0..d {
            if (correlation[(i, i)] - 1.0).abs() > 1e-12 {
                return Err(Error::Configuration(format!(
                    "correlation diagonal entry {i} is {} (must be 1)",
                    correlation[(i, i)]
                )));
            }
            for j in 0..i {
                if (correlation[(i, j)] - correlation[(j, i)]).abs() > 1e-12 {
                    return Err(Error::Configuration(format!(
                        "correlation matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        if Cholesky::new(correlation.clone()).is_none() {
            return Err(Error::Configuration(
                "correlation matrix is not positive definite".into(),
            ));
        }
        Self::build_distribution_backed(marginals, Some(correlation))
    }

    fn build_distribution_backed(
        marginals: Vec<Distribution>,
        correlation: Option<DMatrix<f64>>,
    ) -> Result<Self> {
        if marginals.is_empty() {
            return Err(Error::Configuration("no random inputs given".into()));
        }
        let d = marginals.len();
        let means = DVector::from_iterator(
            d,
            marginals
                .iter()
                .map(|m| m.mean())
                .collect::<Result<Vec<_>>>()?,
        );
        let sds: Vec<f64> = marginals
            .iter()
            .map(|m| m.variance().map(f64::sqrt))
            .collect::<Result<Vec<_>>>()?;
        let mut covariance = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                let rho = match (&correlation, i == j) {
                    (_, true) => 1.0,
                    (Some(c), false) => c[(i, j)],
                    (None, false) => 0.0,
                };
                covariance[(i, j)] = rho * sds[i] * sds[j];
            }
        }
        let names = (0..d).map(|i| format!("x{i}")).collect();
        Ok(RandomInput {
            backing: InputBacking::Distributions {
                marginals,
                correlation,
            },
            names,
            means,
            covariance,
        })
    }

    /// Data-backed input: one realization per row, labels from `names`.
    pub fn from_samples(names: Vec<String>, data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() < 2 {
            return Err(Error::EstimatorUndefined {
                count: data.nrows(),
                needed: 2,
            });
        }
        if names.len() != data.ncols() {
            return Err(Error::DimensionMismatch {
                expected: data.ncols(),
                got: names.len(),
            });
        }
        let (means, covariance) = sample_mean_cov(&data);
        Ok(RandomInput {
            backing: InputBacking::Samples { data },
            names,
            means,
            covariance,
        })
    }

    /// Replace the default labels.
    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                got: names.len(),
            });
        }
        self.names = names;
        Ok(self)
    }

    pub fn dimension(&self) -> usize {
        self.means.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn mean_vector(&self) -> &DVector<f64> {
        &self.means
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn backing(&self) -> &InputBacking {
        &self.backing
    }

    /// Independent distribution-backed marginals, if that is what backs
    /// this input.
    pub fn independent_marginals(&self) -> Option<&[Distribution]> {
        match &self.backing {
            InputBacking::Distributions {
                marginals,
                correlation: None,
            } => Some(marginals),
            _ => None,
        }
    }

    /// `count` joint realizations, one per row.
    ///
    /// Distribution-backed inputs draw from a fresh stream keyed by
    /// `seed` (correlated ones drive each marginal quantile through a
    /// Gaussian copula); data-backed inputs replay their first `count`
    /// rows, so the "draw" is deterministic regardless of seed.
    pub fn sample_matrix(&self, count: usize, seed: u64) -> Result<DMatrix<f64>> {
        match &self.backing {
            InputBacking::Samples { data } => {
                if count > data.nrows() {
                    return Err(Error::CountExceedsData {
                        requested: count,
                        available: data.nrows(),
                    });
                }
                Ok(data.rows(0, count).into_owned())
            }
            InputBacking::Distributions {
                marginals,
                correlation: None,
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let d = marginals.len();
                let mut out = DMatrix::zeros(count, d);
                for k in 0..count {
                    for (j, m) in marginals.iter().enumerate() {
                        out[(k, j)] = m.draw_with(&mut rng);
                    }
                }
                Ok(out)
            }
            InputBacking::Distributions {
                marginals,
                correlation: Some(corr),
            } => {
                let chol = Cholesky::new(corr.clone())
                    .expect("correlation validated at construction");
                let l = chol.l();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let d = marginals.len();
                let mut out = DMatrix::zeros(count, d);
                let mut z = DVector::zeros(d);
                for k in 0..count {
                    for zi in z.iter_mut() {
                        *zi = rng.sample::<f64, _>(rand_distr::StandardNormal);
                    }
                    let corr_z = &l * &z;
                    for (j, m) in marginals.iter().enumerate() {
                        // Φ(score) → marginal quantile; clamp keeps an
                        // 8σ score from rounding onto the closed end of
                        // the quantile's [0,1) domain.
                        let u = 0.5 * (1.0 + erf(corr_z[j] / std::f64::consts::SQRT_2));
                        let u = u.clamp(f64::EPSILON, 1.0 - f64::EPSILON);
                        out[(k, j)] = m.inverse_cdf(u)?;
                    }
                }
                Ok(out)
            }
        }
    }
}

/// How an [`ObjectiveModel`] produces gradients.
enum GradientSpec {
    FiniteDifference,
    Analytic(Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>),
}

/// How an [`ObjectiveModel`] produces second derivatives.
enum HessianSpec {
    FiniteDifferenceDiagonal,
    AnalyticFull(Box<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>),
}

/// The objective `g` with its derivative suppliers.
///
/// Derivatives default to central finite differences; analytic closures
/// can be attached where the model has them. Closures must be pure —
/// estimators rely on a value/gradient call costing the same wherever it
/// happens.
pub struct ObjectiveModel {
    dimension: usize,
    value: Box<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    gradient: GradientSpec,
    hessian: HessianSpec,
}

impl ObjectiveModel {
    /// Model from a value closure alone; derivatives by finite difference.
    pub fn from_value<F>(dimension: usize, value: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        ObjectiveModel {
            dimension,
            value: Box::new(value),
            gradient: GradientSpec::FiniteDifference,
            hessian: HessianSpec::FiniteDifferenceDiagonal,
        }
    }

    /// Attach an analytic gradient.
    pub fn with_gradient<G>(mut self, gradient: G) -> Self
    where
        G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        self.gradient = GradientSpec::Analytic(Box::new(gradient));
        self
    }

    /// Attach an analytic Hessian (full matrix; estimators take what
    /// they need from it).
    pub fn with_hessian<H>(mut self, hessian: H) -> Self
    where
        H: Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    {
        self.hessian = HessianSpec::AnalyticFull(Box::new(hessian));
        self
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Evaluate `g(x)`; a non-finite result is a model error.
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let y = (self.value)(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::ModelEvaluation { draw: None })
        }
    }

    /// Gradient of `g` at `x`.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        match &self.gradient {
            GradientSpec::FiniteDifference => fd_gradient(|p| (self.value)(p), x),
            GradientSpec::Analytic(g) => {
                let out = g(x);
                if out.len() != self.dimension {
                    return Err(Error::DimensionMismatch {
                        expected: self.dimension,
                        got: out.len(),
                    });
                }
                if out.iter().any(|v| !v.is_finite()) {
                    return Err(Error::ModelEvaluation { draw: None });
                }
                Ok(out)
            }
        }
    }

    /// Diagonal of the Hessian of `g` at `x`.
    pub fn hessian_diag(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        match &self.hessian {
            HessianSpec::FiniteDifferenceDiagonal => fd_hessian_diag(|p| (self.value)(p), x),
            HessianSpec::AnalyticFull(h) => {
                let m = h(x);
                if m.shape() != (self.dimension, self.dimension) {
                    return Err(Error::DimensionMismatch {
                        expected: self.dimension,
                        got: m.nrows(),
                    });
                }
                let diag: Vec<f64> = (0..self.dimension).map(|i| m[(i, i)]).collect();
                if diag.iter().any(|v| !v.is_finite()) {
                    return Err(Error::ModelEvaluation { draw: None });
                }
                Ok(diag)
            }
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() == self.dimension {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: x.len(),
            })
        }
    }
}

/// Estimator identity, also its serialization key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "fosm")]
    Fosm,
    #[serde(rename = "sofm")]
    Sofm,
    #[serde(rename = "recfosm")]
    RecFosm,
    #[serde(rename = "mc")]
    MonteCarlo,
}

impl Method {
    pub fn key(&self) -> &'static str {
        match self {
            Method::Fosm => "fosm",
            Method::Sofm => "sofm",
            Method::RecFosm => "recfosm",
            Method::MonteCarlo => "mc",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fosm" => Ok(Method::Fosm),
            "sofm" => Ok(Method::Sofm),
            "recfosm" => Ok(Method::RecFosm),
            "mc" => Ok(Method::MonteCarlo),
            other => Err(Error::Configuration(format!(
                "unknown method `{other}` (expected fosm, sofm, recfosm or mc)"
            ))),
        }
    }
}

/// Sampling-related context attached to an estimate; empty for the
/// analytic estimators.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct EstimateMeta {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_count: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_standard_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sd_standard_error: Option<f64>,
}

/// An estimate of (μ_g, σ_g).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentEstimate {
    pub method: Method,
    pub mean: f64,
    pub sd: f64,
    pub meta: EstimateMeta,
}

/// First-order second-moment estimate: `μ_g = g(μ_X)`,
/// `σ_g² = ∇gᵀ · cov(X) · ∇g`, both at the input mean.
///
/// Costs exactly one model value and one gradient.
pub fn fosm(model: &ObjectiveModel, input: &RandomInput) -> Result<MomentEstimate> {
    if model.dimension() != input.dimension() {
        return Err(Error::DimensionMismatch {
            expected: model.dimension(),
            got: input.dimension(),
        });
    }
    let x = input.mean_vector().as_slice();
    let mean = model.value(x)?;
    let grad = model.gradient(x)?;
    let cov = input.covariance();
    let mut var = 0.0;
    for i in 0..grad.len() {
        for j in 0..grad.len() {
            var += grad[i] * grad[j] * cov[(i, j)];
        }
    }
    Ok(MomentEstimate {
        method: Method::Fosm,
        mean,
        // Quadratic form of a PSD matrix; a tiny negative is rounding.
        sd: var.max(0.0).sqrt(),
        meta: EstimateMeta::default(),
    })
}

/// Second-order mean, second-moment variance with diagonal curvature:
///
/// `μ_g = g(μ) + ½·Σᵢ g''ᵢᵢ·varᵢ`
/// `σ_g² = Σᵢ g'ᵢ²·varᵢ + Σᵢ g'ᵢ·g''ᵢᵢ·μ₃ᵢ + ¼·Σᵢ g''ᵢᵢ²·(μ₄ᵢ − varᵢ²)`
///
/// which is the exact variance of the diagonal quadratic expansion, so
/// quadratic objectives under Normal inputs are reproduced exactly.
/// Requires independent, distribution-backed inputs: the mixed moments a
/// correlated or data-backed input would need are not identified by
/// (mean, covariance) alone.
pub fn sofm(model: &ObjectiveModel, input: &RandomInput) -> Result<MomentEstimate> {
    if model.dimension() != input.dimension() {
        return Err(Error::DimensionMismatch {
            expected: model.dimension(),
            got: input.dimension(),
        });
    }
    let marginals = match &input.backing {
        InputBacking::Distributions {
            marginals,
            correlation: None,
        } => marginals,
        InputBacking::Distributions {
            correlation: Some(_),
            ..
        } => {
            return Err(Error::UnsupportedConfiguration(
                "sofm requires independent inputs (correlated inputs would need mixed \
                 higher moments)"
                    .into(),
            ))
        }
        InputBacking::Samples { .. } => {
            return Err(Error::UnsupportedConfiguration(
                "sofm requires independent distribution-backed inputs (joint measurement \
                 data carries unknown dependence)"
                    .into(),
            ))
        }
    };
    let moments = marginals
        .iter()
        .map(|m| m.moments())
        .collect::<Result<Vec<_>>>()?;
    let x = input.mean_vector().as_slice();
    let base = model.value(x)?;
    let grad = model.gradient(x)?;
    let hess = model.hessian_diag(x)?;

    // Terms are accumulated exactly like fosm's diagonal so a model with
    // an identically zero Hessian reproduces fosm bit for bit (adding a
    // floating-point zero is the identity).
    let mut mean = base;
    let mut var = 0.0;
    for i in 0..grad.len() {
        var += grad[i] * grad[i] * moments[i].variance;
    }
    for i in 0..grad.len() {
        mean += 0.5 * hess[i] * moments[i].variance;
        var += grad[i] * hess[i] * moments[i].mu3;
        let excess = moments[i].mu4 - moments[i].variance * moments[i].variance;
        var += 0.25 * hess[i] * hess[i] * excess;
    }
    Ok(MomentEstimate {
        method: Method::Sofm,
        mean,
        sd: var.max(0.0).sqrt(),
        meta: EstimateMeta::default(),
    })
}

/// Reciprocal first-order estimate.
///
/// The expansion runs in `z = 1/x` about `μ_Z`: the evaluation point is
/// `x*ᵢ = 1/μ_Zᵢ`, the chain rule turns the x-gradient into
/// `∂g/∂zᵢ = −∂g/∂xᵢ(x*)·x*ᵢ²`, and the variance is the quadratic form
/// of that gradient with `cov(Z)`. Costs exactly one model value and one
/// gradient — the same bill as [`fosm`] — yet is exact for objectives
/// linear in `1/x`.
pub fn rec_fosm(model: &ObjectiveModel, recip: &ReciprocalMoments) -> Result<MomentEstimate> {
    if model.dimension() != recip.dimension() {
        return Err(Error::DimensionMismatch {
            expected: model.dimension(),
            got: recip.dimension(),
        });
    }
    for (i, mz) in recip.mean_z.iter().enumerate() {
        if *mz == 0.0 {
            return Err(Error::ZeroMeanEntry { index: i });
        }
    }
    let x_star: Vec<f64> = recip.mean_z.iter().map(|mz| 1.0 / mz).collect();
    let mean = model.value(&x_star)?;
    let grad_x = model.gradient(&x_star)?;
    let dgdz: Vec<f64> = grad_x
        .iter()
        .zip(&x_star)
        .map(|(g, xs)| -g * xs * xs)
        .collect();
    let mut var = 0.0;
    for i in 0..dgdz.len() {
        for j in 0..dgdz.len() {
            var += dgdz[i] * dgdz[j] * recip.cov_z[(i, j)];
        }
    }
    Ok(MomentEstimate {
        method: Method::RecFosm,
        mean,
        sd: var.max(0.0).sqrt(),
        meta: EstimateMeta::default(),
    })
}

/// Joint first/second moments for a partially substituted input: each
/// coordinate is either kept as `Xᵢ` or replaced by `Zᵢ = 1/Xᵢ`, and
/// (mean, cov) describe the resulting mixed vector.
#[derive(Debug, Clone)]
pub struct MixedSubstitution {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    substituted: Vec<bool>,
}

impl MixedSubstitution {
    /// Independent marginals: substituted coordinates take their
    /// reciprocal moments (analytic pair where one exists, quadrature
    /// otherwise), the rest keep their plain mean/variance. Off-diagonal
    /// covariance is zero throughout, which is exact under independence.
    pub fn independent(marginals: &[Distribution], substituted: &[bool]) -> Result<Self> {
        if marginals.len() != substituted.len() {
            return Err(Error::DimensionMismatch {
                expected: marginals.len(),
                got: substituted.len(),
            });
        }
        if marginals.is_empty() {
            return Err(Error::Configuration("no random inputs given".into()));
        }
        let d = marginals.len();
        let mut mean = DVector::zeros(d);
        let mut cov = DMatrix::zeros(d, d);
        for (i, (m, &sub)) in marginals.iter().zip(substituted).enumerate() {
            if sub {
                let r = auto_moments(m)?;
                mean[i] = r.mean_z[0];
                cov[(i, i)] = r.cov_z[(0, 0)];
            } else {
                mean[i] = m.mean()?;
                cov[(i, i)] = m.variance()?;
            }
        }
        Ok(MixedSubstitution {
            mean,
            cov,
            substituted: substituted.to_vec(),
        })
    }

    /// Empirical moments of the mixed vector from joint realizations of
    /// `X` (one per row): substituted columns are transformed to `1/x`
    /// first, then column means and the unbiased covariance are taken.
    /// This is the only route that captures cross-covariance between
    /// substituted and unsubstituted coordinates.
    pub fn from_samples(data: &DMatrix<f64>, substituted: &[bool]) -> Result<Self> {
        if data.ncols() != substituted.len() {
            return Err(Error::DimensionMismatch {
                expected: data.ncols(),
                got: substituted.len(),
            });
        }
        if data.nrows() < 2 {
            return Err(Error::EstimatorUndefined {
                count: data.nrows(),
                needed: 2,
            });
        }
        let mut mixed = data.clone();
        for (j, &sub) in substituted.iter().enumerate() {
            if !sub {
                continue;
            }
            for i in 0..mixed.nrows() {
                if mixed[(i, j)] == 0.0 {
                    return Err(Error::ZeroSampleEntry { row: i, column: j });
                }
                mixed[(i, j)] = 1.0 / mixed[(i, j)];
            }
        }
        let (mean, cov) = sample_mean_cov(&mixed);
        Ok(MixedSubstitution {
            mean,
            cov,
            substituted: substituted.to_vec(),
        })
    }

    /// Like [`MixedSubstitution::from_samples`], but drawing `count`
    /// joint realizations from `input` first (so correlated inputs get
    /// their cross-covariance estimated instead of assumed away).
    pub fn sampled(
        input: &RandomInput,
        substituted: &[bool],
        count: usize,
        seed: u64,
    ) -> Result<Self> {
        if count < 2 {
            return Err(Error::EstimatorUndefined { count, needed: 2 });
        }
        let data = input.sample_matrix(count, seed)?;
        Self::from_samples(&data, substituted)
    }

    pub fn dimension(&self) -> usize {
        self.mean.len()
    }

    pub fn substituted(&self) -> &[bool] {
        &self.substituted
    }
}

/// Reciprocal first-order estimate with a partial substitution: the
/// expansion runs in the mixed vector of `MixedSubstitution` — `zᵢ` where
/// substituted, `xᵢ` where not — with the chain-rule factor applied only
/// to substituted coordinates. Same one-value-one-gradient cost.
pub fn rec_fosm_partitioned(
    model: &ObjectiveModel,
    mixed: &MixedSubstitution,
) -> Result<MomentEstimate> {
    if model.dimension() != mixed.dimension() {
        return Err(Error::DimensionMismatch {
            expected: model.dimension(),
            got: mixed.dimension(),
        });
    }
    let mut x_star = vec![0.0; mixed.dimension()];
    for i in 0..mixed.dimension() {
        if mixed.substituted[i] {
            if mixed.mean[i] == 0.0 {
                return Err(Error::ZeroMeanEntry { index: i });
            }
            x_star[i] = 1.0 / mixed.mean[i];
        } else {
            x_star[i] = mixed.mean[i];
        }
    }
    let mean = model.value(&x_star)?;
    let grad_x = model.gradient(&x_star)?;
    let deriv: Vec<f64> = grad_x
        .iter()
        .enumerate()
        .map(|(i, g)| {
            if mixed.substituted[i] {
                -g * x_star[i] * x_star[i]
            } else {
                *g
            }
        })
        .collect();
    let mut var = 0.0;
    for i in 0..deriv.len() {
        for j in 0..deriv.len() {
            var += deriv[i] * deriv[j] * mixed.cov[(i, j)];
        }
    }
    Ok(MomentEstimate {
        method: Method::RecFosm,
        mean,
        sd: var.max(0.0).sqrt(),
        meta: EstimateMeta::default(),
    })
}

/// Monte Carlo estimate from `count` joint draws (or, for data-backed
/// inputs, the first `count` measured rows).
///
/// Single-threaded with pairwise summation: a fixed `(input, count, seed)`
/// reproduces the estimate bit for bit. `meta` reports the standard error
/// of the mean (`s/√n`) and of the standard deviation (delta method on
/// the fourth central moment).
pub fn monte_carlo(
    model: &ObjectiveModel,
    input: &RandomInput,
    count: usize,
    seed: u64,
) -> Result<MomentEstimate> {
    if model.dimension() != input.dimension() {
        return Err(Error::DimensionMismatch {
            expected: model.dimension(),
            got: input.dimension(),
        });
    }
    if count < 2 {
        return Err(Error::EstimatorUndefined { count, needed: 2 });
    }
    let data = input.sample_matrix(count, seed)?;
    let mut values = Vec::with_capacity(count);
    let mut row = vec![0.0; input.dimension()];
    for k in 0..count {
        for (j, r) in row.iter_mut().enumerate() {
            *r = data[(k, j)];
        }
        let y = (model.value)(&row);
        if !y.is_finite() {
            return Err(Error::ModelEvaluation { draw: Some(k) });
        }
        values.push(y);
    }
    let nf = count as f64;
    let mean = pairwise_sum(&values) / nf;
    let dev2: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&dev2) / (nf - 1.0);
    let sd = var.max(0.0).sqrt();
    let dev4: Vec<f64> = dev2.iter().map(|d| d * d).collect();
    let m4 = pairwise_sum(&dev4) / nf;
    // Var(s) ≈ (μ₄ − s⁴) / (4·s²·n); degenerate samples get SE 0.
    let sd_se = if sd > 0.0 {
        ((m4 - var * var).max(0.0) / (4.0 * var * nf)).sqrt()
    } else {
        0.0
    };
    let seed_meta = match &input.backing {
        InputBacking::Samples { .. } => None,
        InputBacking::Distributions { .. } => Some(seed),
    };
    Ok(MomentEstimate {
        method: Method::MonteCarlo,
        mean,
        sd,
        meta: EstimateMeta {
            seed: seed_meta,
            sample_count: Some(count as u64),
            mean_standard_error: Some(sd / nf.sqrt()),
            sd_standard_error: Some(sd_se),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{weibull_from_mean_cov, Family};
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    fn normal(mean: f64, sd: f64) -> Distribution {
        Distribution::new(Family::Normal { mean, sd }).unwrap()
    }

    #[test]
    fn fosm_is_exact_for_linear_models() {
        let model = ObjectiveModel::from_value(1, |x| 3.0 * x[0]).with_gradient(|_| vec![3.0]);
        let input = RandomInput::independent(vec![normal(5.0, 2.0)]).unwrap();
        let e = fosm(&model, &input).unwrap();
        assert_eq!(e.method, Method::Fosm);
        assert!((e.mean - 15.0).abs() <= 1e-12);
        assert!((e.sd - 6.0).abs() <= 1e-12);
        assert_eq!(e.meta, EstimateMeta::default());
    }

    #[test]
    fn fosm_sd_collapses_with_the_input_cov() {
        let d = weibull_from_mean_cov(70.0, 1e-8).unwrap();
        let input = RandomInput::independent(vec![d]).unwrap();
        let model = ObjectiveModel::from_value(1, |x| 493.82716049382714 / x[0])
            .with_gradient(|x| vec![-493.82716049382714 / (x[0] * x[0])]);
        let e = fosm(&model, &input).unwrap();
        assert!(e.sd < 1e-6, "sd {}", e.sd);
        assert!((e.mean - 493.82716049382714 / 70.0).abs() <= 1e-9);
    }

    #[test]
    fn sofm_is_exact_for_quadratic_under_normal() {
        let model = ObjectiveModel::from_value(1, |x| x[0] * x[0])
            .with_gradient(|x| vec![2.0 * x[0]])
            .with_hessian(|_| DMatrix::from_element(1, 1, 2.0));
        let input = RandomInput::independent(vec![normal(0.0, 1.0)]).unwrap();
        let e = sofm(&model, &input).unwrap();
        // Chi-square(1): mean 1, variance 2.
        assert!((e.mean - 1.0).abs() <= 1e-12, "mean {}", e.mean);
        assert!((e.sd - 2.0_f64.sqrt()).abs() <= 1e-12, "sd {}", e.sd);
    }

    #[test]
    fn sofm_with_zero_hessian_reproduces_fosm_bitwise() {
        let value = |x: &[f64]| 2.0 * x[0] - 0.7 * x[1] + 0.3;
        let grad = |_: &[f64]| vec![2.0, -0.7];
        let model = ObjectiveModel::from_value(2, value)
            .with_gradient(grad)
            .with_hessian(|_| DMatrix::zeros(2, 2));
        let input = RandomInput::independent(vec![normal(1.0, 0.3), normal(-2.0, 1.7)]).unwrap();
        let a = fosm(&model, &input).unwrap();
        let b = sofm(&model, &input).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.sd.to_bits(), b.sd.to_bits());
    }

    #[test]
    fn sofm_rejects_dependent_backings() {
        let model = ObjectiveModel::from_value(2, |x| x[0] + x[1]);
        let corr = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
        let input =
            RandomInput::correlated(vec![normal(0.0, 1.0), normal(0.0, 1.0)], corr).unwrap();
        assert!(matches!(
            sofm(&model, &input),
            Err(Error::UnsupportedConfiguration(_))
        ));

        let data = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 1.5, 2.5, 0.5, 1.5]);
        let input = RandomInput::from_samples(vec!["a".into(), "b".into()], data).unwrap();
        assert!(matches!(
            sofm(&model, &input),
            Err(Error::UnsupportedConfiguration(_))
        ));
    }

    #[test]
    fn rec_fosm_is_exact_for_reciprocal_objectives() {
        // g = C/x is linear in z = 1/x, so the estimate must equal
        // (C·μ_Z, C·σ_Z) to rounding.
        let c = 493.82716;
        let model = ObjectiveModel::from_value(1, move |x| c / x[0])
            .with_gradient(move |x| vec![-c / (x[0] * x[0])]);
        let d = Distribution::new(Family::Weibull {
            rate: 3.0,
            shape: 5.0,
        })
        .unwrap();
        let recip = auto_moments(&d).unwrap();
        let e = rec_fosm(&model, &recip).unwrap();
        assert!((e.mean - c * recip.mean_z[0]).abs() <= 1e-9 * e.mean.abs());
        assert!(
            (e.sd - c * recip.cov_z[(0, 0)].sqrt()).abs() <= 1e-9 * e.sd,
            "sd {} vs {}",
            e.sd,
            c * recip.cov_z[(0, 0)].sqrt()
        );
    }

    #[test]
    fn fosm_and_rec_fosm_cost_one_value_and_one_gradient() {
        let values = Arc::new(AtomicUsize::new(0));
        let grads = Arc::new(AtomicUsize::new(0));
        let (vc, gc) = (values.clone(), grads.clone());
        let model = ObjectiveModel::from_value(1, move |x| {
            vc.fetch_add(1, Ordering::Relaxed);
            7.0 / x[0]
        })
        .with_gradient(move |x| {
            gc.fetch_add(1, Ordering::Relaxed);
            vec![-7.0 / (x[0] * x[0])]
        });

        let input = RandomInput::independent(vec![weibull_from_mean_cov(30.0, 0.1).unwrap()])
            .unwrap();
        fosm(&model, &input).unwrap();
        assert_eq!(values.load(Ordering::Relaxed), 1);
        assert_eq!(grads.load(Ordering::Relaxed), 1);

        values.store(0, Ordering::Relaxed);
        grads.store(0, Ordering::Relaxed);
        let recip =
            auto_moments(&weibull_from_mean_cov(30.0, 0.1).unwrap()).unwrap();
        rec_fosm(&model, &recip).unwrap();
        assert_eq!(values.load(Ordering::Relaxed), 1);
        assert_eq!(grads.load(Ordering::Relaxed), 1);
    }

    #[test]
    fn monte_carlo_is_deterministic_and_seed_stable() {
        let model = ObjectiveModel::from_value(1, |x| 1.0 / x[0]);
        let input = RandomInput::independent(vec![weibull_from_mean_cov(30.0, 0.1).unwrap()])
            .unwrap();
        let a = monte_carlo(&model, &input, 20_000, 5).unwrap();
        let b = monte_carlo(&model, &input, 20_000, 5).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.sd.to_bits(), b.sd.to_bits());
        assert_eq!(a.meta, b.meta);
        assert_eq!(a.meta.seed, Some(5));
        assert_eq!(a.meta.sample_count, Some(20_000));

        // Disjoint seeds agree within combined standard errors.
        let c = monte_carlo(&model, &input, 20_000, 99).unwrap();
        let se = (a.meta.mean_standard_error.unwrap().powi(2)
            + c.meta.mean_standard_error.unwrap().powi(2))
        .sqrt();
        assert!(
            (a.mean - c.mean).abs() <= 3.0 * se,
            "seed drift {} vs 3·SE {}",
            (a.mean - c.mean).abs(),
            3.0 * se
        );
    }

    #[test]
    fn monte_carlo_propagates_draw_failures_with_index() {
        let model = ObjectiveModel::from_value(1, |x| {
            if x[0] > 0.35 {
                f64::NAN
            } else {
                x[0]
            }
        });
        let input = RandomInput::independent(vec![Distribution::new(Family::Uniform {
            lower: 0.3,
            upper: 0.4,
        })
        .unwrap()])
        .unwrap();
        match monte_carlo(&model, &input, 1000, 3) {
            Err(Error::ModelEvaluation { draw: Some(_) }) => {}
            other => panic!("expected indexed model failure, got {other:?}"),
        }
    }

    #[test]
    fn monte_carlo_data_backed_replays_rows() {
        let data = DMatrix::from_row_slice(4, 1, &[1.0, 2.0, 3.0, 4.0]);
        let input = RandomInput::from_samples(vec!["x".into()], data).unwrap();
        let model = ObjectiveModel::from_value(1, |x| x[0]);
        let e = monte_carlo(&model, &input, 4, 123).unwrap();
        assert!((e.mean - 2.5).abs() <= 1e-15);
        assert_eq!(e.meta.seed, None);
        assert!(matches!(
            monte_carlo(&model, &input, 5, 0),
            Err(Error::CountExceedsData {
                requested: 5,
                available: 4
            })
        ));
    }

    #[test]
    fn mixed_substitution_reduces_to_the_pure_cases() {
        let c = 11.0;
        let model = ObjectiveModel::from_value(1, move |x| c / x[0])
            .with_gradient(move |x| vec![-c / (x[0] * x[0])]);
        let d = weibull_from_mean_cov(30.0, 0.15).unwrap();

        // All substituted ≡ rec_fosm.
        let mixed = MixedSubstitution::independent(&[d], &[true]).unwrap();
        let a = rec_fosm_partitioned(&model, &mixed).unwrap();
        let b = rec_fosm(&model, &auto_moments(&d).unwrap()).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.sd.to_bits(), b.sd.to_bits());

        // None substituted ≡ fosm (same expansion point and covariance).
        let mixed = MixedSubstitution::independent(&[d], &[false]).unwrap();
        let a = rec_fosm_partitioned(&model, &mixed).unwrap();
        let input = RandomInput::independent(vec![d]).unwrap();
        let b = fosm(&model, &input).unwrap();
        assert!((a.mean - b.mean).abs() <= 1e-12 * b.mean.abs());
        assert!((a.sd - b.sd).abs() <= 1e-9 * b.sd);
    }

    #[test]
    fn mixed_substitution_from_samples_catches_zero_cells() {
        let data = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 0.0, 2.5, 2.0, 3.0]);
        match MixedSubstitution::from_samples(&data, &[true, false]) {
            Err(Error::ZeroSampleEntry { row: 1, column: 0 }) => {}
            other => panic!("expected zero-cell error, got {other:?}"),
        }
        // The zero sits in a column that is not substituted: no division
        // happens there, so it is fine.
        let data = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 0.0, 2.0, 3.0]);
        assert!(MixedSubstitution::from_samples(&data, &[true, false]).is_ok());
    }

    #[test]
    fn correlated_sampling_tracks_the_requested_correlation() {
        let corr = DMatrix::from_row_slice(2, 2, &[1.0, 0.8, 0.8, 1.0]);
        let input = RandomInput::correlated(
            vec![normal(10.0, 2.0), normal(-4.0, 0.5)],
            corr,
        )
        .unwrap();
        let data = input.sample_matrix(100_000, 17).unwrap();
        let (_, cov) = sample_mean_cov(&data);
        let rho = cov[(0, 1)] / (cov[(0, 0)].sqrt() * cov[(1, 1)].sqrt());
        // For Normal marginals the copula correlation is the Pearson
        // correlation; SE of r at n=1e5 is ~(1−ρ²)/√n ≈ 0.0011.
        assert!((rho - 0.8).abs() <= 0.01, "rho {rho}");
    }

    #[test]
    fn invalid_correlation_matrices_are_rejected() {
        let bad_diag = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 0.9]);
        assert!(RandomInput::correlated(
            vec![normal(0.0, 1.0), normal(0.0, 1.0)],
            bad_diag
        )
        .is_err());
        let not_psd = DMatrix::from_row_slice(2, 2, &[1.0, 1.2, 1.2, 1.0]);
        assert!(RandomInput::correlated(
            vec![normal(0.0, 1.0), normal(0.0, 1.0)],
            not_psd
        )
        .is_err());
    }

    #[test]
    fn estimates_serialize_with_method_keys() {
        let e = MomentEstimate {
            method: Method::RecFosm,
            mean: 1.5,
            sd: 0.25,
            meta: EstimateMeta::default(),
        };
        let json = serde_json::to_value(&e).unwrap();
        assert_eq!(json["method"], "recfosm");
        assert_eq!(json["mean"], 1.5);
        assert!(json["meta"].as_object().unwrap().is_empty());

        assert_eq!(Method::from_str("mc").unwrap(), Method::MonteCarlo);
        assert!(Method::from_str("bogus").is_err());
        assert_eq!(Method::MonteCarlo.key(), "mc");
    }

    #[test]
    fn finite_difference_gradient_matches_analytic_on_random_points() {
        let model_fd = ObjectiveModel::from_value(2, |x| x[0] * x[0] * x[1] + 3.0 * x[1]);
        let analytic =
            |x: &[f64]| vec![2.0 * x[0] * x[1], x[0] * x[0] + 3.0];
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let p = [
                1.0 + 4.0 * rng.random::<f64>(),
                -2.0 + 4.0 * rng.random::<f64>(),
            ];
            let g = model_fd.gradient(&p).unwrap();
            let a = analytic(&p);
            for (gi, ai) in g.iter().zip(&a) {
                assert!(
                    (gi - ai).abs() <= 1e-5 * (1.0 + ai.abs()),
                    "fd {gi} vs analytic {ai} at {p:?}"
                );
            }
        }
    }
}
