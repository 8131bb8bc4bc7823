//! LSPG reduced-order models on an approximation manifold, with or without
//! ECSW hyperreduction.

mod qoi;
mod step;

use nalgebra::{DMatrix, DVector};

use crate::ecsw::ReducedMesh;
use crate::error::{Error, Result};
use crate::hdm::{step_count, BdfScheme, SemiDiscreteModel, TimeDiscretization};
use crate::manifold::Manifold;

pub use qoi::{read_qoi_csv, relative_error, write_qoi_csv, QoiFunctionals, QoiHistory};
pub use step::{hyper_lspg_step, lspg_step};

/// Gauss–Newton settings and the time grid of a reduced run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LspgConfig {
    pub gn_tol_rel: f64,
    pub gn_tol_abs: f64,
    pub gn_max_iters: usize,
    pub scheme: BdfScheme,
    pub dt: f64,
}

impl Default for LspgConfig {
    fn default() -> Self {
        Self {
            gn_tol_rel: 1e-8,
            gn_tol_abs: 1e-12,
            gn_max_iters: 25,
            scheme: BdfScheme::Bdf2,
            dt: 0.05,
        }
    }
}

impl LspgConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gn_tol_rel > 0.0) || !(self.gn_tol_abs > 0.0) {
            return Err(Error::InvalidArgument(
                "Gauss-Newton tolerances must be positive".into(),
            ));
        }
        if self.gn_max_iters == 0 {
            return Err(Error::InvalidArgument(
                "Gauss-Newton needs at least one iteration".into(),
            ));
        }
        TimeDiscretization::new(self.scheme, self.dt).map(|_| ())
    }
}

/// Coordinates and quantities of interest of a reduced run.
#[derive(Debug, Clone, PartialEq)]
pub struct RomTrajectory {
    /// One column per recorded time, `n × N_t`.
    pub coordinates: DMatrix<f64>,
    pub qoi: QoiHistory,
    /// Gauss–Newton iterations of every step (recorded or not).
    pub iterations: Vec<usize>,
}

impl RomTrajectory {
    pub fn times(&self) -> &[f64] {
        &self.qoi.times
    }

    /// Full states `ũ(q)` at the recorded times.
    pub fn reconstruct(&self, manifold: &Manifold) -> Result<DMatrix<f64>> {
        let cols = self
            .coordinates
            .column_iter()
            .map(|q| manifold.evaluate(&q.into_owned()))
            .collect::<Result<Vec<_>>>()?;
        Ok(DMatrix::from_columns(&cols))
    }
}

/// What to integrate and what to record.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub t_final: f64,
    /// Record every `record_stride`-th step (the initial state always).
    pub record_stride: usize,
    /// Cells whose reconstructed values are recorded.
    pub probes: Vec<usize>,
}

/// Keeps the history states a reduced step needs. With a reduced mesh only
/// the augmented rows are reconstructed; other entries stay zero and are
/// never read.
struct History<'a> {
    manifold: &'a Manifold,
    rows: Option<Vec<usize>>,
}

impl History<'_> {
    fn state(&self, q: &DVector<f64>) -> Result<DVector<f64>> {
        match &self.rows {
            None => self.manifold.evaluate(q),
            Some(rows) => {
                let values = self.manifold.evaluate_rows(q, rows)?;
                let mut u = DVector::zeros(self.manifold.state_dimension());
                for (k, &r) in rows.iter().enumerate() {
                    u[r] = values[k];
                }
                Ok(u)
            }
        }
    }
}

/// Integrates the reduced model from `invert(u⁰)` to `t_final`.
///
/// On a failed step the trajectory recorded so far is returned together
/// with the error, so that callers can flush it.
pub fn run_rom_partial(
    manifold: &Manifold,
    model: &SemiDiscreteModel,
    mesh: Option<&ReducedMesh>,
    settings: &RunSettings,
    cfg: &LspgConfig,
) -> (RomTrajectory, Option<Error>) {
    let n = manifold.dimension();
    let mut traj = RomTrajectory {
        coordinates: DMatrix::zeros(n, 0),
        qoi: QoiHistory::new(settings.probes.clone()),
        iterations: Vec::new(),
    };
    let setup = || -> Result<_> {
        cfg.validate()?;
        if settings.record_stride == 0 {
            return Err(Error::InvalidArgument(
                "record stride must be at least 1".into(),
            ));
        }
        if manifold.state_dimension() != model.dimension() {
            return Err(Error::DimensionMismatch(format!(
                "manifold has {} rows, model has {} dofs",
                manifold.state_dimension(),
                model.dimension()
            )));
        }
        if let Some(&p) = settings.probes.iter().find(|&&p| p >= model.dimension()) {
            return Err(Error::InvalidArgument(format!(
                "probe cell {p} is outside the mesh"
            )));
        }
        if let Some(mesh) = mesh {
            mesh.check_compatible(manifold, model)?;
        }
        let steps = step_count(cfg.dt, settings.t_final)?;
        let q0 = manifold.invert(model.initial_state())?;
        Ok((steps, q0))
    };
    let (steps, q0) = match setup() {
        Ok(v) => v,
        Err(e) => return (traj, Some(e)),
    };
    let functionals = QoiFunctionals::new(manifold, model.mass(), &settings.probes);
    let history = History {
        manifold,
        rows: mesh.map(|m| m.augmented().to_vec()),
    };
    let mut columns = vec![q0.clone()];
    traj.qoi.push(0.0, &functionals.eval(&q0));

    let mut td = TimeDiscretization::new(cfg.scheme, cfg.dt).expect("validated");
    let mut q = q0;
    let outcome = (|| -> Result<()> {
        td.push(history.state(&q)?);
        for m in 1..=steps {
            let t = m as f64 * cfg.dt;
            let stepped = match mesh {
                None => lspg_step(manifold, model, &q, &td, t, cfg),
                Some(mesh) => hyper_lspg_step(manifold, model, mesh, &q, &td, t, cfg),
            };
            let (next, iters) = stepped.map_err(|e| Error::RomStep {
                time: t,
                source: Box::new(e),
            })?;
            traj.iterations.push(iters);
            td.push(history.state(&next)?);
            if m % settings.record_stride == 0 {
                traj.qoi.push(t, &functionals.eval(&next));
                columns.push(next.clone());
            }
            q = next;
        }
        Ok(())
    })();
    traj.coordinates = DMatrix::from_columns(&columns);
    (traj, outcome.err())
}

pub fn run_rom(
    manifold: &Manifold,
    model: &SemiDiscreteModel,
    mesh: Option<&ReducedMesh>,
    settings: &RunSettings,
    cfg: &LspgConfig,
) -> Result<RomTrajectory> {
    match run_rom_partial(manifold, model, mesh, settings, cfg) {
        (traj, None) => Ok(traj),
        (_, Some(e)) => Err(e),
    }
}

/// Space–time relative error of reconstructed states against reference
/// states, column for column.
pub fn state_relative_error(states: &DMatrix<f64>, reference: &DMatrix<f64>) -> Result<f64> {
    if states.shape() != reference.shape() {
        return Err(Error::DimensionMismatch(format!(
            "state histories are {:?} and {:?}",
            states.shape(),
            reference.shape()
        )));
    }
    relative_error(states.as_slice(), reference.as_slice())
}
