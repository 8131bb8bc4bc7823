//! Tikhonov-regularized least squares through SVD filter factors, and the
//! generalized cross-validation functional used to pick the regularization
//! strength.
//!
//! Both operate on one "row problem": given the thin SVD `Q̄ = U·diag(σ)·Yᵀ`
//! of a feature matrix (features × samples) and one right-hand side of
//! length `samples`, find `h` minimizing `‖rhs − Q̄ᵀh‖² + α²‖h‖²`.

use nalgebra::DVector;

use super::svd::ThinSvd;
use crate::error::{Error, Result};

/// Spectral coordinates of a right-hand side: `β = Yᵀ·rhs` and the squared
/// norm of the part of `rhs` outside the row space of `Q̄`.
#[derive(Debug, Clone)]
pub struct SpectralRhs {
    pub beta: DVector<f64>,
    pub outside_sq: f64,
    pub samples: usize,
}

impl SpectralRhs {
    pub fn new(svd: &ThinSvd, rhs: &DVector<f64>) -> Result<Self> {
        if rhs.len() != svd.right_vectors.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "rhs has length {}, expected {}",
                rhs.len(),
                svd.right_vectors.nrows()
            )));
        }
        let beta = svd.right_vectors.tr_mul(rhs);
        let outside_sq = (rhs.norm_squared() - beta.norm_squared()).max(0.0);
        Ok(Self {
            beta,
            outside_sq,
            samples: rhs.len(),
        })
    }

    /// GCV functional at `alpha`; `+∞` when the effective residual degrees of
    /// freedom vanish.
    pub fn gcv(&self, sigma: &DVector<f64>, alpha: f64) -> f64 {
        let a2 = alpha * alpha;
        let mut misfit = self.outside_sq;
        let mut dof = 0.0;
        for (s, b) in sigma.iter().zip(self.beta.iter()) {
            let s2 = s * s;
            let damped = a2 / (s2 + a2) * b;
            misfit += damped * damped;
            dof += s2 / (s2 + a2);
        }
        let denom = self.samples as f64 - dof;
        if denom <= self.samples as f64 * f64::EPSILON {
            return f64::INFINITY;
        }
        misfit / (denom * denom)
    }
}

/// Filter-factor solution `h = Σ_l σ_l²/(σ_l²+α²) · (y_lᵀ·rhs / σ_l) · u_l`.
///
/// With `alpha = 0` this is the minimum-norm least-squares solution.
pub fn tikhonov_row_solve(svd: &ThinSvd, rhs: &DVector<f64>, alpha: f64) -> Result<DVector<f64>> {
    if alpha < 0.0 || alpha.is_nan() {
        return Err(Error::NegativeRegularization(alpha));
    }
    if rhs.len() != svd.right_vectors.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "rhs has length {}, expected {}",
            rhs.len(),
            svd.right_vectors.nrows()
        )));
    }
    let a2 = alpha * alpha;
    let mut coeffs = svd.right_vectors.tr_mul(rhs);
    for (c, s) in coeffs.iter_mut().zip(svd.singular_values.iter()) {
        *c *= s / (s * s + a2);
    }
    Ok(&svd.left_vectors * coeffs)
}

/// Generalized cross-validation score of the Tikhonov filter at `alpha`.
pub fn gcv_score(svd: &ThinSvd, rhs: &DVector<f64>, alpha: f64) -> Result<f64> {
    if alpha < 0.0 || alpha.is_nan() {
        return Err(Error::NegativeRegularization(alpha));
    }
    Ok(SpectralRhs::new(svd, rhs)?.gcv(&svd.singular_values, alpha))
}
