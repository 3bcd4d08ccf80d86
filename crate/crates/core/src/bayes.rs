//! Linear readout estimation on a feature matrix.
//!
//! With features `Φ` (samples × features), targets `Y` (samples × outputs),
//! Gaussian noise `N(0, σ² I)` and an isotropic prior `N(0, α⁻¹ I)` on every
//! output column of the weights, the posterior is Gaussian with
//!
//! ```text
//! Σ* = (α I + ΦᵀΦ / σ²)⁻¹,    m* = Σ* Φᵀ Y / σ²
//! ```
//!
//! and one `Σ*` is shared by all output columns. The latent predictive at a
//! feature vector `φ` is `N(φᵀ m*, φᵀ Σ* φ)`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};

/// Cholesky diagonal ratios whose square exceeds this are reported as badly
/// conditioned.
const CONDITION_WARN: f64 = 1e12;
/// Unregularized normal equations past this condition estimate are rejected.
const CONDITION_REJECT: f64 = 1e14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Observation noise standard deviation.
    pub sigma: f64,
    /// Prior precision of the readout weights.
    pub alpha: f64,
}

impl NoiseModel {
    pub fn new(sigma: f64, alpha: f64) -> Result<Self> {
        let noise = Self { sigma, alpha };
        noise.validate()?;
        Ok(noise)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("sigma", self.sigma)?;
        ensure_positive("alpha", self.alpha)
    }

    /// Ridge penalty whose solution equals the posterior mean.
    pub fn equivalent_ridge(&self) -> f64 {
        self.alpha * self.sigma * self.sigma
    }
}

fn check_rows(phi: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<()> {
    if phi.nrows() != y.nrows() {
        return Err(Error::DimensionMismatch {
            context: "feature rows vs target rows",
            expected: phi.nrows(),
            actual: y.nrows(),
        });
    }
    if phi.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("regression data"));
    }
    Ok(())
}

/// Squared ratio of the largest to the smallest Cholesky diagonal entry; a
/// cheap lower-bound proxy for the 2-norm condition number.
fn condition_estimate(chol: &Cholesky<f64, Dyn>) -> f64 {
    let l = chol.l_dirty();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..l.nrows() {
        let d = l[(i, i)].abs();
        lo = lo.min(d);
        hi = hi.max(d);
    }
    if lo == 0.0 {
        f64::INFINITY
    } else {
        (hi / lo).powi(2)
    }
}

/// Gram matrix `ΦᵀΦ`.
pub fn gram(phi: &DMatrix<f64>) -> DMatrix<f64> {
    phi.transpose() * phi
}

/// Ridge-regularized least squares, `argmin ‖Φ a − Y‖² + ridge ‖a‖²`, solved
/// through the Cholesky factor of `ΦᵀΦ + ridge I`.
pub fn fit_least_squares(phi: &DMatrix<f64>, y: &DMatrix<f64>, ridge: f64) -> Result<DMatrix<f64>> {
    check_rows(phi, y)?;
    if phi.nrows() == 0 {
        return Err(Error::EmptySelection("least squares needs at least one sample".into()));
    }
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "ridge",
            reason: format!("must be nonnegative, got {ridge}"),
        });
    }
    let g = gram(phi);
    let rhs = phi.transpose() * y;
    solve_regularized_gram(g, rhs, ridge)
}

/// Solves `(G + ridge I) a = rhs` for a precomputed Gram matrix.
pub fn solve_regularized_gram(
    mut g: DMatrix<f64>,
    rhs: DMatrix<f64>,
    ridge: f64,
) -> Result<DMatrix<f64>> {
    for i in 0..g.nrows() {
        g[(i, i)] += ridge;
    }
    let chol = match Cholesky::new(g) {
        Some(c) => c,
        None if ridge == 0.0 => {
            return Err(Error::IllConditioned {
                condition: f64::INFINITY,
            })
        }
        None => return Err(Error::Factorization("regularized normal matrix".into())),
    };
    let cond = condition_estimate(&chol);
    if ridge == 0.0 && cond > CONDITION_REJECT {
        return Err(Error::IllConditioned { condition: cond });
    }
    if cond > CONDITION_WARN {
        log::warn!("least-squares normal matrix is badly conditioned (estimate {cond:.3e})");
    }
    Ok(chol.solve(&rhs))
}

/// Gaussian posterior over the readout weights.
///
/// Stores the Cholesky factor of the precision `α I + ΦᵀΦ/σ²`; the covariance
/// is only materialized on request.
#[derive(Debug, Clone)]
pub struct GaussianPosterior {
    mean: DMatrix<f64>,
    precision_chol: Cholesky<f64, Dyn>,
    noise: NoiseModel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveGaussian {
    pub mean: DVector<f64>,
    /// Latent variance `φᵀ Σ* φ`, excluding observation noise.
    pub variance: f64,
}

/// Conjugate posterior for features `phi` and targets `y`.
pub fn fit_posterior(
    phi: &DMatrix<f64>,
    y: &DMatrix<f64>,
    noise: NoiseModel,
) -> Result<GaussianPosterior> {
    check_rows(phi, y)?;
    fit_posterior_from_gram(gram(phi), phi.transpose() * y, noise)
}

/// Same as [`fit_posterior`] given the sufficient statistics `ΦᵀΦ` and `ΦᵀY`.
pub fn fit_posterior_from_gram(
    gram: DMatrix<f64>,
    phi_t_y: DMatrix<f64>,
    noise: NoiseModel,
) -> Result<GaussianPosterior> {
    noise.validate()?;
    let k = gram.nrows();
    if gram.ncols() != k || phi_t_y.nrows() != k {
        return Err(Error::DimensionMismatch {
            context: "posterior sufficient statistics",
            expected: k,
            actual: phi_t_y.nrows(),
        });
    }
    let inv_var = 1.0 / (noise.sigma * noise.sigma);
    let mut precision = gram * inv_var;
    for i in 0..k {
        precision[(i, i)] += noise.alpha;
    }
    let precision_chol = Cholesky::new(precision)
        .ok_or_else(|| Error::Factorization("posterior precision is not positive definite".into()))?;
    let cond = condition_estimate(&precision_chol);
    if cond > CONDITION_WARN {
        log::warn!("posterior precision is badly conditioned (estimate {cond:.3e})");
    }
    let mean = precision_chol.solve(&(phi_t_y * inv_var));
    if mean.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("posterior mean"));
    }
    Ok(GaussianPosterior {
        mean,
        precision_chol,
        noise,
    })
}

impl GaussianPosterior {
    pub fn mean(&self) -> &DMatrix<f64> {
        &self.mean
    }

    pub fn noise(&self) -> NoiseModel {
        self.noise
    }

    pub fn feature_count(&self) -> usize {
        self.mean.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.mean.ncols()
    }

    /// Dense covariance `Σ*`.
    pub fn covariance(&self) -> DMatrix<f64> {
        self.precision_chol.inverse()
    }

    pub fn predict(&self, phi_star: &DVector<f64>) -> Result<PredictiveGaussian> {
        if phi_star.len() != self.feature_count() {
            return Err(Error::DimensionMismatch {
                context: "predictive feature vector",
                expected: self.feature_count(),
                actual: phi_star.len(),
            });
        }
        let mean = self.mean.tr_mul(phi_star);
        let whitened = self
            .precision_chol
            .l_dirty()
            .solve_lower_triangular(phi_star)
            .expect("Cholesky factor has a positive diagonal");
        Ok(PredictiveGaussian {
            mean,
            variance: whitened.norm_squared(),
        })
    }

    /// Predictive means (`M* × outputs`) and latent variances for every row
    /// of `phi_star`, without forming the `M* × M*` joint covariance.
    pub fn predict_batch(&self, phi_star: &DMatrix<f64>) -> Result<(DMatrix<f64>, DVector<f64>)> {
        if phi_star.ncols() != self.feature_count() {
            return Err(Error::DimensionMismatch {
                context: "predictive feature matrix",
                expected: self.feature_count(),
                actual: phi_star.ncols(),
            });
        }
        let means = phi_star * &self.mean;
        // Columns of L⁻¹ Φ*ᵀ; each squared column norm is φᵀ Σ* φ.
        let whitened = self
            .precision_chol
            .l_dirty()
            .solve_lower_triangular(&phi_star.transpose())
            .expect("Cholesky factor has a positive diagonal");
        let variances = DVector::from_iterator(
            whitened.ncols(),
            whitened.column_iter().map(|c| c.norm_squared()),
        );
        Ok((means, variances))
    }
}
