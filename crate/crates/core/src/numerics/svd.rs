use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Rank-revealing thin singular value decomposition `A = U·diag(σ)·Yᵀ`.
///
/// Only the numerically nonzero part of the spectrum is kept, sorted in
/// descending order.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    pub left_vectors: DMatrix<f64>,
    pub singular_values: DVector<f64>,
    pub right_vectors: DMatrix<f64>,
}

impl ThinSvd {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    pub fn sigma_max(&self) -> f64 {
        self.singular_values[0]
    }

    pub fn sigma_min(&self) -> f64 {
        self.singular_values[self.rank() - 1]
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut scaled = self.left_vectors.clone();
        for (mut col, s) in scaled.column_iter_mut().zip(self.singular_values.iter()) {
            col *= *s;
        }
        scaled * self.right_vectors.transpose()
    }
}

/// Thin SVD truncated at `max(m, p)·ε·σ_max`.
pub fn thin_svd(a: &DMatrix<f64>) -> Result<ThinSvd> {
    let (m, p) = a.shape();
    if m == 0 || p == 0 || a.iter().all(|v| *v == 0.0) {
        return Err(Error::ZeroMatrix);
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "matrix has non-finite entries".into(),
        ));
    }

    let svd = a.clone().svd(true, true);
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    let sigma = svd.singular_values;

    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]));

    let sigma_max = sigma[order[0]];
    if sigma_max <= 0.0 {
        return Err(Error::ZeroMatrix);
    }
    let cutoff = m.max(p) as f64 * f64::EPSILON * sigma_max;
    let kept: Vec<usize> = order.into_iter().filter(|&i| sigma[i] > cutoff).collect();
    let k = kept.len();

    let mut left_vectors = DMatrix::zeros(m, k);
    let mut right_vectors = DMatrix::zeros(p, k);
    let mut singular_values = DVector::zeros(k);
    for (dst, &src) in kept.iter().enumerate() {
        left_vectors.set_column(dst, &u.column(src));
        right_vectors.set_column(dst, &v_t.row(src).transpose());
        singular_values[dst] = sigma[src];
    }

    Ok(ThinSvd {
        left_vectors,
        singular_values,
        right_vectors,
    })
}
