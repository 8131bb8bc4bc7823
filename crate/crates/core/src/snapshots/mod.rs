//! Solution snapshots and the POD basis built from them.

mod io;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::numerics::thin_svd;

pub use io::{load_snapshots, read_snapshots, save_snapshots, write_snapshots};

/// Time-stamped HDM states (one column per snapshot) and the reference state.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSet {
    states: DMatrix<f64>,
    times: Vec<f64>,
    u_ref: DVector<f64>,
}

impl SnapshotSet {
    pub fn new(states: DMatrix<f64>, times: Vec<f64>, u_ref: DVector<f64>) -> Result<Self> {
        if states.ncols() == 0 {
            return Err(Error::InvalidArgument("snapshot set is empty".into()));
        }
        if states.ncols() != times.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} snapshots but {} time stamps",
                states.ncols(),
                times.len()
            )));
        }
        if states.nrows() != u_ref.len() {
            return Err(Error::DimensionMismatch(format!(
                "snapshots have {} rows but u_ref has length {}",
                states.nrows(),
                u_ref.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument(
                "snapshot times must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            states,
            times,
            u_ref,
        })
    }

    pub fn states(&self) -> &DMatrix<f64> {
        &self.states
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn u_ref(&self) -> &DVector<f64> {
        &self.u_ref
    }

    /// Number of snapshots `N_s`.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// State dimension `N`.
    pub fn dimension(&self) -> usize {
        self.u_ref.len()
    }

    pub fn column(&self, j: usize) -> DVector<f64> {
        self.states.column(j).into_owned()
    }

    /// `S − u_ref·1ᵀ`
    pub fn centered(&self) -> DMatrix<f64> {
        let mut c = self.states.clone();
        for mut col in c.column_iter_mut() {
            col -= &self.u_ref;
        }
        c
    }
}

/// Orthonormal right basis `V` with its retained singular values.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedBasis {
    basis: DMatrix<f64>,
    singular_values: DVector<f64>,
    discarded_energy: f64,
}

impl ReducedBasis {
    /// Wraps a basis; columns must be orthonormal to 1e-10.
    pub fn new(
        basis: DMatrix<f64>,
        singular_values: DVector<f64>,
        discarded_energy: f64,
    ) -> Result<Self> {
        if basis.ncols() == 0 {
            return Err(Error::InvalidArgument("basis has no columns".into()));
        }
        if singular_values.len() != basis.ncols() {
            return Err(Error::DimensionMismatch(
                "one singular value per basis vector expected".into(),
            ));
        }
        let defect =
            (basis.tr_mul(&basis) - DMatrix::identity(basis.ncols(), basis.ncols())).amax();
        if defect > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "basis columns are not orthonormal (defect {defect:.3e})"
            )));
        }
        Ok(Self {
            basis,
            singular_values,
            discarded_energy,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn singular_values(&self) -> &DVector<f64> {
        &self.singular_values
    }

    /// Fraction of the snapshot energy `Σσ²` left out of the basis.
    pub fn discarded_energy(&self) -> f64 {
        self.discarded_energy
    }

    pub fn dimension(&self) -> usize {
        self.basis.ncols()
    }

    pub fn state_dimension(&self) -> usize {
        self.basis.nrows()
    }

    /// Keeps the leading `n` vectors.
    pub fn truncate(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.dimension() {
            return Err(Error::InvalidArgument(format!(
                "cannot truncate a basis of dimension {} to {n}",
                self.dimension()
            )));
        }
        let kept: f64 = self.singular_values.rows(0, n).norm_squared();
        let all: f64 = self.singular_values.norm_squared();
        let total = all / (1.0 - self.discarded_energy).max(f64::MIN_POSITIVE);
        Ok(Self {
            basis: self.basis.columns(0, n).into_owned(),
            singular_values: self.singular_values.rows(0, n).into_owned(),
            discarded_energy: ((total - kept) / total).clamp(0.0, 1.0),
        })
    }
}

/// Smallest `n` whose leading squared singular values carry at least
/// `1 − ε` of the total energy.
pub fn energy_dimension(singular_values: &[f64], epsilon: f64) -> usize {
    let total: f64 = singular_values.iter().map(|s| s * s).sum();
    let mut cumulative = 0.0;
    for (i, s) in singular_values.iter().enumerate() {
        cumulative += s * s;
        if cumulative / total >= 1.0 - epsilon {
            return i + 1;
        }
    }
    singular_values.len()
}

/// POD basis of the `u_ref`-centered snapshots, truncated by the energy
/// criterion at tolerance `epsilon`.
pub fn pod_basis(snaps: &SnapshotSet, epsilon: f64) -> Result<ReducedBasis> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    let svd = thin_svd(&snaps.centered()).map_err(|e| match e {
        Error::ZeroMatrix => Error::ZeroEnergy,
        other => other,
    })?;
    let sigma = svd.singular_values.as_slice();
    let n = energy_dimension(sigma, epsilon);
    let total: f64 = sigma.iter().map(|s| s * s).sum();
    let kept: f64 = sigma[..n].iter().map(|s| s * s).sum();
    Ok(ReducedBasis {
        basis: svd.left_vectors.columns(0, n).into_owned(),
        singular_values: svd.singular_values.rows(0, n).into_owned(),
        discarded_energy: ((total - kept) / total).max(0.0),
    })
}
