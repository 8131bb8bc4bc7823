//! Regression of the quadratic coefficients `H̄` on the POD projection
//! errors of the training snapshots.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::heuristic::{dimension_heuristic, DimensionChain};
use super::kron::{feature_count, unique_kron};
use super::{BuildRecord, Manifold};
use crate::error::{Error, Result};
use crate::numerics::{thin_svd, tikhonov_row_solve, SpectralRhs, ThinSvd};
use crate::snapshots::{pod_basis, ReducedBasis, SnapshotSet};

#[derive(Debug, Clone)]
pub struct BuildIntermediates {
    /// `Q`, one column `q_l = Vᵀ(u_l − u_ref)` per snapshot.
    pub coordinates: DMatrix<f64>,
    /// `E`, with columns `u_l − V·q_l − u_ref`.
    pub error_matrix: DMatrix<f64>,
    /// `Q̄`, with columns `κ(q_l)`.
    pub feature_matrix: DMatrix<f64>,
    pub feature_svd: ThinSvd,
}

impl BuildIntermediates {
    /// Row `i` of `E` as a column vector.
    pub fn error_row(&self, i: usize) -> DVector<f64> {
        self.error_matrix.row(i).transpose()
    }
}

pub fn build_intermediates(
    snaps: &SnapshotSet,
    basis: &ReducedBasis,
) -> Result<BuildIntermediates> {
    if basis.state_dimension() != snaps.dimension() {
        return Err(Error::DimensionMismatch(format!(
            "basis has {} rows, snapshots have {}",
            basis.state_dimension(),
            snaps.dimension()
        )));
    }
    let v = basis.matrix();
    let centered = snaps.centered();
    let coordinates = v.tr_mul(&centered);
    // coordinates at rounding level carry no quadratic information
    if coordinates.amax() <= 64.0 * f64::EPSILON * centered.amax() {
        return Err(Error::DegenerateCoordinates);
    }
    let error_matrix = &centered - v * &coordinates;
    let mut feature_matrix = DMatrix::zeros(feature_count(basis.dimension()), snaps.len());
    for (l, q) in coordinates.column_iter().enumerate() {
        feature_matrix.set_column(l, &unique_kron(&q.into_owned()));
    }
    let feature_svd = thin_svd(&feature_matrix).map_err(|e| match e {
        Error::ZeroMatrix => Error::DegenerateCoordinates,
        other => other,
    })?;
    Ok(BuildIntermediates {
        coordinates,
        error_matrix,
        feature_matrix,
        feature_svd,
    })
}

/// `⌈ω·n_Q̄⌉` values spaced log-uniformly from `σ_max` down to `σ_min`,
/// where `n_Q̄` is the number of nonzero singular values of `Q̄`.
pub fn alpha_grid(svd: &ThinSvd, omega: f64) -> Result<Vec<f64>> {
    if !(omega > 0.0 && omega <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "omega must lie in (0, 1], got {omega}"
        )));
    }
    let samples = ((omega * svd.rank() as f64).ceil() as usize).max(1);
    let (hi, lo) = (svd.sigma_max().ln(), svd.sigma_min().ln());
    if samples == 1 {
        return Ok(vec![svd.sigma_max()]);
    }
    Ok((0..samples)
        .map(|k| {
            if k == samples - 1 {
                svd.sigma_min()
            } else {
                (hi + (lo - hi) * k as f64 / (samples - 1) as f64).exp()
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaSelection {
    pub alpha_star: f64,
    /// Trial values, largest first.
    pub grid: Vec<f64>,
    /// How many rows picked each trial value.
    pub votes: Vec<usize>,
}

/// Per-row GCV minimization over [`alpha_grid`]; α* is the most frequent
/// winner. Both the per-row minimum and the vote break ties toward the larger α.
pub fn select_alpha_gcv(inter: &BuildIntermediates, omega: f64) -> Result<AlphaSelection> {
    let grid = alpha_grid(&inter.feature_svd, omega)?;
    let svd = &inter.feature_svd;
    let winners = (0..inter.error_matrix.nrows())
        .into_par_iter()
        .map(|i| {
            let rhs = SpectralRhs::new(svd, &inter.error_row(i))?;
            let mut best = (0, f64::INFINITY);
            for (k, &alpha) in grid.iter().enumerate() {
                let g = rhs.gcv(&svd.singular_values, alpha);
                if g < best.1 {
                    best = (k, g);
                }
            }
            Ok(best.0)
        })
        .collect::<Result<Vec<usize>>>()?;
    let mut votes = vec![0; grid.len()];
    for w in winners {
        votes[w] += 1;
    }
    let mut winner = 0;
    for (k, &v) in votes.iter().enumerate() {
        if v > votes[winner] {
            winner = k;
        }
    }
    Ok(AlphaSelection {
        alpha_star: grid[winner],
        grid,
        votes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regularization {
    /// Select α* by GCV with grid density ω.
    Gcv { omega: f64 },
    /// Use this α* as given.
    Fixed(f64),
}

/// Fits `H̄` row by row for a given basis. The returned record carries α*
/// and the singular value range of `Q̄`; the dimension-chain fields are left
/// empty.
pub fn build_quadratic(
    snaps: &SnapshotSet,
    basis: &ReducedBasis,
    reg: Regularization,
) -> Result<Manifold> {
    let inter = build_intermediates(snaps, basis)?;
    let (alpha, omega, overridden) = match reg {
        Regularization::Gcv { omega } => (
            select_alpha_gcv(&inter, omega)?.alpha_star,
            Some(omega),
            false,
        ),
        Regularization::Fixed(alpha) => {
            if !(alpha >= 0.0) {
                return Err(Error::NegativeRegularization(alpha));
            }
            (alpha, None, true)
        }
    };
    let svd = &inter.feature_svd;
    let rows = (0..snaps.dimension())
        .into_par_iter()
        .map(|i| tikhonov_row_solve(svd, &inter.error_row(i), alpha))
        .collect::<Result<Vec<_>>>()?;
    let coeffs_t = DMatrix::from_columns(&rows);
    let record = BuildRecord {
        alpha_star: alpha,
        alpha_overridden: overridden,
        omega,
        zeta: None,
        eps_s: None,
        n_tra: None,
        n_qua_prime: None,
        n_qua: None,
        sigma_max: svd.sigma_max(),
        sigma_min: svd.sigma_min(),
    };
    Manifold::quadratic_from_transposed(basis.clone(), snaps.u_ref().clone(), coeffs_t, record)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticSettings {
    pub eps_s: f64,
    pub zeta: f64,
    pub regularization: Regularization,
}

/// The whole construction: POD at `eps_s` gives `n_tra`, the dimension
/// heuristic gives `n`, the POD basis is truncated to `n` and `H̄` is fitted.
pub fn build_quadratic_manifold(
    snaps: &SnapshotSet,
    settings: &QuadraticSettings,
) -> Result<(Manifold, DimensionChain)> {
    let affine = pod_basis(snaps, settings.eps_s)?;
    let chain = dimension_heuristic(affine.dimension(), settings.zeta, snaps.len())?;
    let full = pod_basis(snaps, f64::MIN_POSITIVE)?;
    let basis = full.truncate(chain.n.min(full.dimension()))?;
    let mut m = build_quadratic(snaps, &basis, settings.regularization)?;
    if let Some(q) = m.quadratic.as_mut() {
        q.record.zeta = Some(settings.zeta);
        q.record.eps_s = Some(settings.eps_s);
        q.record.n_tra = Some(chain.n_tra);
        q.record.n_qua_prime = Some(chain.n_qua_prime);
        q.record.n_qua = Some(chain.n_qua);
    }
    Ok((m, chain))
}
