use nalgebra::{DMatrix, DVector};

use super::model::SemiDiscreteModel;
use super::time::TimeDiscretization;
use crate::error::{Error, Result};
use crate::snapshots::SnapshotSet;

/// Stopping rule for the per-step Newton solve:
/// `‖r‖₂ ≤ tol_abs + tol_rel·‖r₀‖₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonConfig {
    pub tol_rel: f64,
    pub tol_abs: f64,
    pub max_iters: usize,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            tol_rel: 1e-8,
            tol_abs: 1e-12,
            max_iters: 25,
        }
    }
}

#[derive(Debug, Clone)]
pub struct HdmRun {
    pub snapshots: SnapshotSet,
    /// Newton iterations used by every time step, in order.
    pub newton_iterations: Vec<usize>,
}

/// Full-step Newton solve of `r(u, t) = 0` starting from `guess`.
///
/// Returns the solution and the number of iterations; `step` only labels the
/// error.
pub fn newton_solve(
    model: &SemiDiscreteModel,
    guess: DVector<f64>,
    t: f64,
    td: &TimeDiscretization,
    cfg: &NewtonConfig,
    step: usize,
) -> Result<(DVector<f64>, usize)> {
    let mut u = guess;
    let mut r = model.discrete_residual(&u, t, td)?;
    let tol = cfg.tol_abs + cfg.tol_rel * r.norm();
    for iter in 0..=cfg.max_iters {
        let norm = r.norm();
        if norm <= tol {
            return Ok((u, iter));
        }
        if iter == cfg.max_iters || !norm.is_finite() {
            return Err(Error::NewtonNotConverged {
                step,
                residual: norm,
            });
        }
        let jac = model.jacobian(&u, t, td)?;
        let du = jac.solve(&r)?;
        u -= du;
        r = model.discrete_residual(&u, t, td).map_err(|e| match e {
            Error::NonFiniteState => Error::NewtonNotConverged {
                step,
                residual: f64::INFINITY,
            },
            other => other,
        })?;
    }
    unreachable!()
}

/// Number of time steps of size `dt` that reach `t_final` exactly.
pub fn step_count(dt: f64, t_final: f64) -> Result<usize> {
    if !(t_final >= 0.0) || !t_final.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "final time must be nonnegative, got {t_final}"
        )));
    }
    let steps = (t_final / dt).round();
    if (steps * dt - t_final).abs() > 1e-9 * t_final.max(dt) {
        return Err(Error::InvalidArgument(format!(
            "final time {t_final} is not a multiple of the time step {dt}"
        )));
    }
    Ok(steps as usize)
}

/// Integrates the model from its initial state to `t_final`, keeping every
/// `snapshot_stride`-th state (the initial state always included).
pub fn hdm_simulate(
    model: &SemiDiscreteModel,
    td: &TimeDiscretization,
    t_final: f64,
    snapshot_stride: usize,
    newton: &NewtonConfig,
) -> Result<HdmRun> {
    if snapshot_stride == 0 {
        return Err(Error::InvalidArgument(
            "snapshot stride must be at least 1".into(),
        ));
    }
    let steps = step_count(td.dt, t_final)?;
    let u0 = model.initial_state().clone();
    let mut td = TimeDiscretization::new(td.scheme, td.dt)?;
    td.push(u0.clone());

    let mut columns = vec![u0.clone()];
    let mut times = vec![0.0];
    let mut newton_iterations = Vec::with_capacity(steps);
    let mut u = u0.clone();
    for m in 1..=steps {
        let t = m as f64 * td.dt;
        let (next, iters) = newton_solve(model, u, t, &td, newton, m)?;
        newton_iterations.push(iters);
        td.push(next.clone());
        if m % snapshot_stride == 0 {
            columns.push(next.clone());
            times.push(t);
        }
        u = next;
    }

    let states = DMatrix::from_columns(&columns);
    Ok(HdmRun {
        snapshots: SnapshotSet::new(states, times, u0)?,
        newton_iterations,
    })
}
