use std::fmt;

use crate::error::{Error, Result};

/// Every intermediate of the quadratic-dimension heuristic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionChain {
    pub n_tra: usize,
    pub zeta: f64,
    /// `(√(9 + 8·n_tra) − 3) / 2` before rounding.
    pub raw_prime: f64,
    pub n_qua_prime: usize,
    pub n_qua: usize,
    /// Largest `n` with `n(n+1)/2 ≤ N_s`.
    pub snapshot_bound: usize,
    pub n: usize,
}

impl fmt::Display for DimensionChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "n_tra = {} -> n_qua' = {} -> n_qua = {} -> n = min({}, {}) = {}",
            self.n_tra, self.n_qua_prime, self.n_qua, self.n_qua, self.snapshot_bound, self.n
        )
    }
}

/// Largest `n` with `n(n+1)/2 ≤ n_s`, in integer arithmetic.
pub fn snapshot_bound(n_s: usize) -> usize {
    let mut n = ((((8 * n_s + 1) as f64).sqrt() - 1.0) / 2.0) as usize;
    while (n + 1) * (n + 2) / 2 <= n_s {
        n += 1;
    }
    while n > 0 && n * (n + 1) / 2 > n_s {
        n -= 1;
    }
    n
}

/// Picks the quadratic-manifold dimension whose `n + n(n+1)/2` degrees of
/// freedom roughly match an affine basis of dimension `n_tra`, inflated by
/// `1 + ζ` and capped so that the regression has no more unknowns per row
/// than there are snapshots.
pub fn dimension_heuristic(n_tra: usize, zeta: f64, n_s: usize) -> Result<DimensionChain> {
    if n_tra == 0 {
        return Err(Error::InvalidArgument("n_tra must be at least 1".into()));
    }
    if n_s == 0 {
        return Err(Error::InvalidArgument(
            "at least one snapshot is required".into(),
        ));
    }
    if !(zeta >= 0.0) || !zeta.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "zeta must be nonnegative, got {zeta}"
        )));
    }
    let raw_prime = ((9.0 + 8.0 * n_tra as f64).sqrt() - 3.0) / 2.0;
    let n_qua_prime = raw_prime.round() as usize;
    let n_qua = ((1.0 + zeta) * n_qua_prime as f64).round() as usize;
    let bound = snapshot_bound(n_s);
    Ok(DimensionChain {
        n_tra,
        zeta,
        raw_prime,
        n_qua_prime,
        n_qua,
        snapshot_bound: bound,
        n: n_qua.min(bound).max(1),
    })
}
