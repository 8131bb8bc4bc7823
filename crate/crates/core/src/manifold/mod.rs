//! Affine and quadratic approximation manifolds
//! `ũ(q) = u_ref + V·q (+ H̄·κ(q))`.

mod build;
mod heuristic;
mod io;
mod kron;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::snapshots::ReducedBasis;

pub use build::{
    alpha_grid, build_intermediates, build_quadratic, build_quadratic_manifold, select_alpha_gcv,
    AlphaSelection, BuildIntermediates, QuadraticSettings, Regularization,
};
pub use heuristic::{dimension_heuristic, snapshot_bound, DimensionChain};
pub use io::{load_manifold, manifold_checksum, read_manifold, save_manifold, write_manifold};
pub use kron::{feature_count, unique_kron, unique_kron_tangent, QuadraticFeatureIndex};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ManifoldKind {
    Affine,
    Quadratic,
}

impl ManifoldKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Affine => "affine",
            Self::Quadratic => "quadratic",
        }
    }
}

/// How the quadratic term was obtained. Fields that do not apply are `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildRecord {
    pub alpha_star: f64,
    /// `true` when α* was supplied rather than selected by GCV.
    pub alpha_overridden: bool,
    pub omega: Option<f64>,
    pub zeta: Option<f64>,
    pub eps_s: Option<f64>,
    pub n_tra: Option<usize>,
    pub n_qua_prime: Option<usize>,
    pub n_qua: Option<usize>,
    pub sigma_max: f64,
    pub sigma_min: f64,
}

#[derive(Debug, Clone, PartialEq)]
struct QuadraticTerm {
    index: QuadraticFeatureIndex,
    /// `H̄ᵀ`, so that column `i` is the coefficient row of state entry `i`.
    coeffs_t: DMatrix<f64>,
    record: BuildRecord,
}

/// Stopping rule for the Gauss–Newton manifold inversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InversionConfig {
    pub max_iters: usize,
    /// Stop when `‖T(q)ᵀ(ũ(q) − u)‖ ≤ gradient_tol · n`.
    pub gradient_tol: f64,
    /// Stop when the update is shorter than this.
    pub step_tol: f64,
}

impl Default for InversionConfig {
    fn default() -> Self {
        Self {
            max_iters: 50,
            gradient_tol: 1e-10,
            step_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifold {
    basis: ReducedBasis,
    u_ref: DVector<f64>,
    quadratic: Option<QuadraticTerm>,
}

impl Manifold {
    pub fn affine(basis: ReducedBasis, u_ref: DVector<f64>) -> Result<Self> {
        if basis.state_dimension() != u_ref.len() {
            return Err(Error::DimensionMismatch(format!(
                "basis has {} rows but u_ref has length {}",
                basis.state_dimension(),
                u_ref.len()
            )));
        }
        Ok(Self {
            basis,
            u_ref,
            quadratic: None,
        })
    }

    /// `h_bar` is `N × n(n+1)/2` with columns ordered as [`QuadraticFeatureIndex`].
    pub fn quadratic(
        basis: ReducedBasis,
        u_ref: DVector<f64>,
        h_bar: &DMatrix<f64>,
        record: BuildRecord,
    ) -> Result<Self> {
        Self::quadratic_from_transposed(basis, u_ref, h_bar.transpose(), record)
    }

    pub(crate) fn quadratic_from_transposed(
        basis: ReducedBasis,
        u_ref: DVector<f64>,
        coeffs_t: DMatrix<f64>,
        record: BuildRecord,
    ) -> Result<Self> {
        let mut m = Self::affine(basis, u_ref)?;
        let index = QuadraticFeatureIndex::new(m.dimension());
        if coeffs_t.shape() != (index.len(), m.state_dimension()) {
            return Err(Error::DimensionMismatch(format!(
                "H̄ must be {} × {}, got {} × {}",
                m.state_dimension(),
                index.len(),
                coeffs_t.ncols(),
                coeffs_t.nrows()
            )));
        }
        m.quadratic = Some(QuadraticTerm {
            index,
            coeffs_t,
            record,
        });
        Ok(m)
    }

    pub fn kind(&self) -> ManifoldKind {
        if self.quadratic.is_some() {
            ManifoldKind::Quadratic
        } else {
            ManifoldKind::Affine
        }
    }

    /// Reduced dimension `n`.
    pub fn dimension(&self) -> usize {
        self.basis.dimension()
    }

    pub fn state_dimension(&self) -> usize {
        self.u_ref.len()
    }

    pub fn basis(&self) -> &ReducedBasis {
        &self.basis
    }

    pub fn u_ref(&self) -> &DVector<f64> {
        &self.u_ref
    }

    /// `H̄`, or `None` for an affine manifold.
    pub fn h_bar(&self) -> Option<DMatrix<f64>> {
        self.quadratic.as_ref().map(|t| t.coeffs_t.transpose())
    }

    pub(crate) fn h_bar_transposed(&self) -> Option<&DMatrix<f64>> {
        self.quadratic.as_ref().map(|t| &t.coeffs_t)
    }

    pub fn build_record(&self) -> Option<&BuildRecord> {
        self.quadratic.as_ref().map(|t| &t.record)
    }

    fn check_coords(&self, q: &DVector<f64>) -> Result<()> {
        if q.len() != self.dimension() {
            return Err(Error::DimensionMismatch(format!(
                "coordinates have length {}, manifold dimension is {}",
                q.len(),
                self.dimension()
            )));
        }
        Ok(())
    }

    /// `ũ(q)`
    pub fn evaluate(&self, q: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_coords(q)?;
        let mut u = &self.u_ref + self.basis.matrix() * q;
        if let Some(t) = &self.quadratic {
            u += t.coeffs_t.tr_mul(&unique_kron(q));
        }
        Ok(u)
    }

    /// Entries `rows` of `ũ(q)`, in the given order.
    pub fn evaluate_rows(&self, q: &DVector<f64>, rows: &[usize]) -> Result<DVector<f64>> {
        self.check_coords(q)?;
        let v = self.basis.matrix();
        let kappa = self.quadratic.as_ref().map(|_| unique_kron(q));
        Ok(DVector::from_iterator(
            rows.len(),
            rows.iter().map(|&r| {
                let mut x = self.u_ref[r] + v.row(r).dot(&q.transpose());
                if let (Some(t), Some(k)) = (&self.quadratic, &kappa) {
                    x += t.coeffs_t.column(r).dot(k);
                }
                x
            }),
        ))
    }

    /// `T(q) = V + H̄·∂κ/∂q`, an `N × n` matrix.
    pub fn tangent(&self, q: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_coords(q)?;
        let mut t = self.basis.matrix().clone();
        if let Some(quad) = &self.quadratic {
            t += quad.coeffs_t.tr_mul(&unique_kron_tangent(q));
        }
        Ok(t)
    }

    /// Rows `rows` of `T(q)`.
    pub fn tangent_rows(&self, q: &DVector<f64>, rows: &[usize]) -> Result<DMatrix<f64>> {
        self.check_coords(q)?;
        let n = self.dimension();
        let v = self.basis.matrix();
        let mut t = DMatrix::from_fn(rows.len(), n, |k, j| v[(rows[k], j)]);
        if let Some(quad) = &self.quadratic {
            let dk = unique_kron_tangent(q);
            for (k, &r) in rows.iter().enumerate() {
                let extra = dk.tr_mul(&quad.coeffs_t.column(r));
                for j in 0..n {
                    t[(k, j)] += extra[j];
                }
            }
        }
        Ok(t)
    }

    /// `Vᵀ(u − u_ref)`
    pub fn project(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        if u.len() != self.state_dimension() {
            return Err(Error::DimensionMismatch(format!(
                "state has length {}, expected {}",
                u.len(),
                self.state_dimension()
            )));
        }
        Ok(self.basis.matrix().tr_mul(&(u - &self.u_ref)))
    }

    /// Least-squares coordinates of `u` on the manifold, by Gauss–Newton from
    /// the linear projection.
    pub fn invert(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        self.invert_with(u, &InversionConfig::default())
    }

    pub fn invert_with(&self, u: &DVector<f64>, cfg: &InversionConfig) -> Result<DVector<f64>> {
        let mut q = self.project(u)?;
        if self.quadratic.is_none() {
            return Ok(q);
        }
        let n = self.dimension();
        for iter in 0..=cfg.max_iters {
            let misfit = self.evaluate(&q)? - u;
            let t = self.tangent(&q)?;
            let gradient = t.tr_mul(&misfit).norm();
            if !gradient.is_finite() {
                return Err(Error::NonFiniteState);
            }
            if gradient <= cfg.gradient_tol * n as f64 {
                return Ok(q);
            }
            if iter == cfg.max_iters {
                return Err(Error::InversionNotConverged {
                    iterations: iter,
                    gradient,
                    misfit: misfit.norm(),
                    iterate: q.as_slice().to_vec(),
                });
            }
            let svd = t.svd(true, true);
            let cutoff = u.len().max(n) as f64 * f64::EPSILON * svd.singular_values.max();
            let step = svd
                .solve(&misfit, cutoff)
                .map_err(|e| Error::InvalidArgument(e.to_string()))?;
            q -= &step;
            if step.norm() <= cfg.step_tol {
                return Ok(q);
            }
        }
        unreachable!()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_basis(rng: &mut ChaCha8Rng, big_n: usize, n: usize) -> ReducedBasis {
        let a = DMatrix::from_fn(big_n, n, |_, _| rng.random_range(-1.0..1.0));
        let q = a.qr().q();
        ReducedBasis::new(q, DVector::from_fn(n, |i, _| (n - i) as f64), 0.0).unwrap()
    }

    fn record() -> BuildRecord {
        BuildRecord {
            alpha_star: 0.0,
            alpha_overridden: true,
            omega: None,
            zeta: None,
            eps_s: None,
            n_tra: None,
            n_qua_prime: None,
            n_qua: None,
            sigma_max: 1.0,
            sigma_min: 1.0,
        }
    }

    fn random_quadratic(seed: u64, big_n: usize, n: usize, scale: f64) -> Manifold {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let basis = random_basis(&mut rng, big_n, n);
        let u_ref = DVector::from_fn(big_n, |_, _| rng.random_range(-1.0..1.0));
        let h = DMatrix::from_fn(big_n, feature_count(n), |_, _| {
            scale * rng.random_range(-1.0..1.0)
        });
        Manifold::quadratic(basis, u_ref, &h, record()).unwrap()
    }

    #[test]
    fn affine_evaluation_and_projection() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let basis = random_basis(&mut rng, 12, 3);
        let u_ref = DVector::from_element(12, 0.5);
        let m = Manifold::affine(basis, u_ref.clone()).unwrap();
        let q = DVector::from_vec(vec![1.0, -2.0, 0.25]);
        let u = m.evaluate(&q).unwrap();
        assert!((m.project(&u).unwrap() - &q).amax() < 1e-13);
        assert!((m.invert(&u).unwrap() - &q).amax() < 1e-13);
        assert_eq!(m.tangent(&q).unwrap(), *m.basis().matrix());
        assert_eq!(m.evaluate(&DVector::zeros(3)).unwrap(), u_ref);
        assert!(m.evaluate(&DVector::zeros(2)).is_err());
        assert_eq!(m.kind(), ManifoldKind::Affine);
    }

    #[test]
    fn quadratic_term_by_hand() {
        // N = 2, n = 1, V = e₁, H̄ = [0; 3]: ũ(q) = (q, 3q²)
        let basis = ReducedBasis::new(
            DMatrix::from_column_slice(2, 1, &[1.0, 0.0]),
            DVector::from_element(1, 1.0),
            0.0,
        )
        .unwrap();
        let h = DMatrix::from_column_slice(2, 1, &[0.0, 3.0]);
        let m = Manifold::quadratic(basis, DVector::zeros(2), &h, record()).unwrap();
        let q = DVector::from_element(1, 2.0);
        assert_eq!(m.evaluate(&q).unwrap().as_slice(), &[2.0, 12.0]);
        assert_eq!(m.tangent(&q).unwrap().as_slice(), &[1.0, 12.0]);
        assert_eq!(m.h_bar().unwrap(), h);
    }

    #[test]
    fn tangent_matches_finite_differences() {
        let m = random_quadratic(3, 30, 4, 0.3);
        let q = DVector::from_vec(vec![0.4, -0.7, 1.1, 0.2]);
        let t = m.tangent(&q).unwrap();
        let h = 1e-6;
        for k in 0..4 {
            let mut up = q.clone();
            let mut dn = q.clone();
            up[k] += h;
            dn[k] -= h;
            let fd = (m.evaluate(&up).unwrap() - m.evaluate(&dn).unwrap()) / (2.0 * h);
            let rel = (&fd - t.column(k)).norm() / t.column(k).norm();
            assert!(rel < 1e-8, "{rel}");
        }
    }

    #[test]
    fn row_subsets_agree_with_full_evaluation() {
        let m = random_quadratic(4, 25, 3, 0.5);
        let q = DVector::from_vec(vec![0.3, 0.9, -1.2]);
        let rows = [24, 0, 7, 7, 13];
        let u = m.evaluate(&q).unwrap();
        let t = m.tangent(&q).unwrap();
        let ur = m.evaluate_rows(&q, &rows).unwrap();
        let tr = m.tangent_rows(&q, &rows).unwrap();
        for (k, &r) in rows.iter().enumerate() {
            assert!((ur[k] - u[r]).abs() < 1e-13);
            assert!((tr.row(k) - t.row(r)).amax() < 1e-13);
        }
    }

    #[test]
    fn inversion_recovers_coordinates() {
        let m = random_quadratic(5, 40, 3, 0.1);
        let q = DVector::from_vec(vec![0.5, -1.0, 0.8]);
        let u = m.evaluate(&q).unwrap();
        let back = m.invert(&u).unwrap();
        assert!((back - q).amax() < 1e-9);
    }

    #[test]
    fn inversion_reports_non_convergence() {
        let m = random_quadratic(6, 40, 3, 0.1);
        let u = m
            .evaluate(&DVector::from_vec(vec![0.5, -1.0, 0.8]))
            .unwrap();
        let cfg = InversionConfig {
            max_iters: 0,
            ..Default::default()
        };
        match m.invert_with(&u, &cfg) {
            Err(Error::InversionNotConverged { iterate, .. }) => assert_eq!(iterate.len(), 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn shape_checks() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let basis = random_basis(&mut rng, 10, 2);
        assert!(Manifold::affine(basis.clone(), DVector::zeros(9)).is_err());
        let h = DMatrix::zeros(10, 2);
        assert!(Manifold::quadratic(basis, DVector::zeros(10), &h, record()).is_err());
    }

    proptest! {
        #[test]
        fn evaluation_is_exact_on_the_quadratic_model(
            q in proptest::collection::vec(-2.0f64..2.0, 3),
            seed in 0u64..1000,
        ) {
            let m = random_quadratic(seed, 15, 3, 1.0);
            let q = DVector::from_vec(q);
            let h = m.h_bar().unwrap();
            let index = QuadraticFeatureIndex::new(3);
            // independent sum over the pairs
            let mut expected = m.u_ref() + m.basis().matrix() * &q;
            for (k, &(i, j)) in index.pairs().iter().enumerate() {
                expected += h.column(k) * (q[i] * q[j]);
            }
            let got = m.evaluate(&q).unwrap();
            prop_assert!((got - expected).amax() < 1e-12);
        }

        #[test]
        fn small_curvature_inversion_round_trip(
            q in proptest::collection::vec(-1.0f64..1.0, 4),
            seed in 0u64..1000,
        ) {
            let m = random_quadratic(seed, 30, 4, 0.05);
            let q = DVector::from_vec(q);
            let back = m.invert(&m.evaluate(&q).unwrap()).unwrap();
            prop_assert!((back - q).amax() < 1e-8);
        }
    }
}
