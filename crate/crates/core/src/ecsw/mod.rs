//! ECSW hyperreduction: the cubature training system built from
//! manifold-consistent snapshot reconstructions, and its NNLS solution.

mod mesh;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hdm::{BdfScheme, SemiDiscreteModel, TimeDiscretization};
use crate::manifold::Manifold;
use crate::numerics::nnls_early_stop;
use crate::snapshots::SnapshotSet;

pub use mesh::{load_mesh, read_mesh, save_mesh, write_mesh, ReducedMesh};

/// Snapshot indices `0, stride, 2·stride, …` (`⌈N_s/stride⌉` of them).
pub fn training_indices(n_s: usize, stride: usize) -> Result<Vec<usize>> {
    if stride == 0 {
        return Err(Error::InvalidArgument(
            "training stride must be at least 1".into(),
        ));
    }
    Ok((0..n_s).step_by(stride).collect())
}

fn coordinates_of(manifold: &Manifold, snaps: &SnapshotSet, index: usize) -> Result<DVector<f64>> {
    manifold
        .invert(&snaps.column(index))
        .map_err(|e| Error::TrainingSnapshot {
            index,
            source: Box::new(e),
        })
}

/// Manifold coordinates of the training snapshots: the orthogonal
/// projection for an affine manifold, Gauss–Newton inversion otherwise.
pub fn training_coordinates(
    manifold: &Manifold,
    snaps: &SnapshotSet,
    stride: usize,
) -> Result<Vec<DVector<f64>>> {
    training_indices(snaps.len(), stride)?
        .into_par_iter()
        .map(|l| coordinates_of(manifold, snaps, l))
        .collect()
}

/// One training point: coordinates `q_l` and the reconstructed states that
/// precede snapshot `l` in the snapshot set, as the BDF history.
#[derive(Debug, Clone)]
pub struct TrainingSample {
    pub snapshot: usize,
    pub time: f64,
    pub coordinates: DVector<f64>,
    /// Most recent first.
    pub history: Vec<DVector<f64>>,
    pub scheme: BdfScheme,
    pub dt: f64,
}

impl TrainingSample {
    pub fn time_discretization(&self) -> Result<TimeDiscretization> {
        TimeDiscretization::with_history(self.scheme, self.dt, self.history.clone())
    }
}

/// Training samples at every `stride`-th snapshot.
///
/// The residual at snapshot `l` is the one the reduced model would see when
/// stepping onto it: the history is `ũ(q_{l−1})` (and `ũ(q_{l−2})` for
/// BDF2) with `dt` the snapshot spacing. The first snapshot has no
/// predecessor and uses BDF1 with itself as history and `dt_first` as step.
pub fn training_samples(
    manifold: &Manifold,
    snaps: &SnapshotSet,
    stride: usize,
    scheme: BdfScheme,
    dt_first: f64,
) -> Result<Vec<TrainingSample>> {
    let levels = scheme.history_len();
    let indices = training_indices(snaps.len(), stride)?;
    let times = snaps.times();
    indices
        .into_par_iter()
        .map(|l| {
            let q = coordinates_of(manifold, snaps, l)?;
            if l == 0 {
                return Ok(TrainingSample {
                    snapshot: 0,
                    time: times[0],
                    history: vec![manifold.evaluate(&q)?],
                    coordinates: q,
                    scheme: BdfScheme::Bdf1,
                    dt: dt_first,
                });
            }
            let dt = times[l] - times[l - 1];
            let mut history = Vec::with_capacity(levels);
            for k in 1..=levels.min(l) {
                if k > 1 && ((times[l - k + 1] - times[l - k]) - dt).abs() > 1e-9 * dt {
                    break;
                }
                history.push(manifold.evaluate(&coordinates_of(manifold, snaps, l - k)?)?);
            }
            Ok(TrainingSample {
                snapshot: l,
                time: times[l],
                coordinates: q,
                history,
                scheme,
                dt,
            })
        })
        .collect()
}

/// `C` with one `n`-row block per training sample and one column per
/// entity, and `d = C·1`.
#[derive(Debug, Clone)]
pub struct TrainingSystem {
    pub c: DMatrix<f64>,
    pub d: DVector<f64>,
    pub snapshots: Vec<usize>,
    pub reduced_dim: usize,
    /// `‖C·1 − Σ_l W_lᵀr_l‖ / ‖d‖`, the assembly check.
    pub assembly_defect: f64,
}

/// Assembles `c_{le} = (L_e W_l)ᵀ r_e(ũ_l)` with `W_l = J(ũ_l)·T(q_l)` and
/// checks the row sums against the globally assembled `W_lᵀ r(ũ_l)` to 1e-10.
pub fn build_training_system(
    manifold: &Manifold,
    model: &SemiDiscreteModel,
    samples: &[TrainingSample],
) -> Result<TrainingSystem> {
    if manifold.state_dimension() != model.dimension() {
        return Err(Error::DimensionMismatch(format!(
            "manifold has {} rows, model has {} dofs",
            manifold.state_dimension(),
            model.dimension()
        )));
    }
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no training samples".into()));
    }
    let n = manifold.dimension();
    let ne = model.entities().len();
    let mut c = DMatrix::zeros(samples.len() * n, ne);
    let mut global = DVector::zeros(samples.len() * n);
    for (l, s) in samples.iter().enumerate() {
        let td = s.time_discretization()?;
        let u = manifold.evaluate(&s.coordinates)?;
        let tangent = manifold.tangent(&s.coordinates)?;
        let columns = (0..ne)
            .into_par_iter()
            .map(|e| {
                let stencil = &model.entities()[e].stencil;
                let u_st: Vec<f64> = stencil.iter().map(|&i| u[i]).collect();
                let r_e = model.entity_residual(e, &u_st, s.time, &td)?;
                let j_e = model.entity_jacobian(e, &u_st, s.time, &td)?;
                let t_e = DMatrix::from_fn(stencil.len(), n, |a, b| tangent[(stencil[a], b)]);
                let block = (j_e * t_e).tr_mul(&r_e);
                if block.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFiniteTraining {
                        snapshot: s.snapshot,
                        entity: e,
                    });
                }
                Ok(block)
            })
            .collect::<Result<Vec<_>>>()?;
        for (e, block) in columns.iter().enumerate() {
            c.view_mut((l * n, e), (n, 1)).copy_from(block);
        }
        let w = model.jacobian(&u, s.time, &td)?.mul_dense(&tangent);
        let r = model.discrete_residual(&u, s.time, &td)?;
        global.rows_mut(l * n, n).copy_from(&w.tr_mul(&r));
    }
    let d = c.column_sum();
    let scale = d.norm().max(global.norm());
    let defect = if scale > 0.0 {
        (&d - &global).norm() / scale
    } else {
        0.0
    };
    if !(defect <= 1e-10) {
        return Err(Error::AssemblyMismatch(defect));
    }
    Ok(TrainingSystem {
        c,
        d,
        snapshots: samples.iter().map(|s| s.snapshot).collect(),
        reduced_dim: n,
        assembly_defect: defect,
    })
}

/// NNLS with early stop at `‖Cξ − d‖ ≤ τ‖d‖`; the support becomes `Ẽ`.
pub fn train_reduced_mesh(
    system: &TrainingSystem,
    model: &SemiDiscreteModel,
    tau: f64,
) -> Result<ReducedMesh> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "tau must lie in (0, 1), got {tau}"
        )));
    }
    if system.c.ncols() != model.entities().len() {
        return Err(Error::DimensionMismatch(
            "training system and model disagree on the entity count".into(),
        ));
    }
    let sol = nnls_early_stop(&system.c, &system.d, tau)?;
    let dnorm = system.d.norm();
    let ratio = if dnorm > 0.0 {
        sol.residual_norm / dnorm
    } else {
        0.0
    };
    Ok(ReducedMesh::from_weights(model, sol.weights, tau, system.reduced_dim)?.with_ratio(ratio))
}
