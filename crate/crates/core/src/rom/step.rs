use nalgebra::{DMatrix, DVector};

use super::LspgConfig;
use crate::ecsw::ReducedMesh;
use crate::error::{Error, Result};
use crate::hdm::{SemiDiscreteModel, TimeDiscretization};
use crate::manifold::Manifold;

fn not_converged(iterations: usize, gradient: f64, q: &DVector<f64>) -> Error {
    Error::GaussNewtonNotConverged {
        iterations,
        gradient,
        iterate: q.as_slice().to_vec(),
    }
}

/// Least-squares solve of `min ‖r + W·Δ‖` through a Householder QR of `W`.
fn qr_least_squares(w: DMatrix<f64>, r: &DVector<f64>) -> Result<DVector<f64>> {
    let (rows, n) = w.shape();
    let qr = w.qr();
    let upper = qr.r();
    let diag_max = upper.diagonal().amax();
    let diag_min = upper
        .diagonal()
        .iter()
        .fold(f64::INFINITY, |m, d| m.min(d.abs()));
    if !(diag_min > rows.max(n) as f64 * f64::EPSILON * diag_max) {
        return Err(Error::TangentRankCollapse);
    }
    let mut rhs = -r;
    qr.q_tr_mul(&mut rhs);
    upper
        .solve_upper_triangular(&rhs.rows(0, n).into_owned())
        .ok_or(Error::TangentRankCollapse)
}

/// One LSPG time step by Gauss–Newton on `‖r(ũ(q), t_new)‖₂²`, starting
/// from `q_m`. `td` carries the full-state history. Returns the new
/// coordinates and the iteration count.
pub fn lspg_step(
    manifold: &Manifold,
    model: &SemiDiscreteModel,
    q_m: &DVector<f64>,
    td: &TimeDiscretization,
    t_new: f64,
    cfg: &LspgConfig,
) -> Result<(DVector<f64>, usize)> {
    let mut q = q_m.clone();
    let mut tol = f64::INFINITY;
    for iter in 0..=cfg.gn_max_iters {
        let u = manifold.evaluate(&q)?;
        let r = model.discrete_residual(&u, t_new, td)?;
        let w = model
            .jacobian(&u, t_new, td)?
            .mul_dense(&manifold.tangent(&q)?);
        let gradient = w.tr_mul(&r).norm();
        if !gradient.is_finite() {
            return Err(not_converged(iter, gradient, &q));
        }
        if iter == 0 {
            tol = cfg.gn_tol_rel * gradient + cfg.gn_tol_abs;
        }
        if gradient <= tol {
            return Ok((q, iter));
        }
        if iter == cfg.gn_max_iters {
            return Err(not_converged(iter, gradient, &q));
        }
        q += qr_least_squares(w, &r)?;
    }
    unreachable!()
}

/// [`lspg_step`] with the residual and Jacobian contractions replaced by
/// weighted sums over the reduced mesh, solved through the `n × n` normal
/// equations. Only the augmented rows of the history states in `td` are read.
pub fn hyper_lspg_step(
    manifold: &Manifold,
    model: &SemiDiscreteModel,
    mesh: &ReducedMesh,
    q_m: &DVector<f64>,
    td: &TimeDiscretization,
    t_new: f64,
    cfg: &LspgConfig,
) -> Result<(DVector<f64>, usize)> {
    if mesh.weights().is_empty() {
        return Err(Error::SingularHyperreducedSystem);
    }
    let rows = mesh.augmented();
    let mut local = vec![usize::MAX; model.dimension()];
    for (k, &r) in rows.iter().enumerate() {
        local[r] = k;
    }
    let n = manifold.dimension();
    let entities = model.entities();
    let height: usize = mesh
        .weights()
        .iter()
        .map(|&(e, _)| entities[e].owned.len())
        .sum();
    let mut q = q_m.clone();
    let mut tol = f64::INFINITY;
    let mut u_st = Vec::new();
    // weighted rows √ξ_e·J_e T_{e+} and √ξ_e·r_e stacked over the mesh
    let mut a = DMatrix::<f64>::zeros(height, n);
    let mut b = DVector::<f64>::zeros(height);
    for iter in 0..=cfg.gn_max_iters {
        let u_rows = manifold.evaluate_rows(&q, rows)?;
        let t_rows = manifold.tangent_rows(&q, rows)?;
        let mut offset = 0;
        for &(e, xi) in mesh.weights() {
            let stencil = &entities[e].stencil;
            u_st.clear();
            u_st.extend(stencil.iter().map(|&i| u_rows[local[i]]));
            let r_e = model.entity_residual(e, &u_st, t_new, td)?;
            let j_e = model.entity_jacobian(e, &u_st, t_new, td)?;
            let t_e = DMatrix::from_fn(stencil.len(), n, |a, b| t_rows[(local[stencil[a]], b)]);
            let scale = xi.sqrt();
            let m = r_e.len();
            a.rows_mut(offset, m).copy_from(&(j_e * t_e * scale));
            b.rows_mut(offset, m).copy_from(&(r_e * scale));
            offset += m;
        }
        let gram = a.tr_mul(&a);
        let grad = a.tr_mul(&b);
        let gradient = grad.norm();
        if !gradient.is_finite() {
            return Err(not_converged(iter, gradient, &q));
        }
        if iter == 0 {
            tol = cfg.gn_tol_rel * gradient + cfg.gn_tol_abs;
        }
        if gradient <= tol {
            return Ok((q, iter));
        }
        if iter == cfg.gn_max_iters {
            return Err(not_converged(iter, gradient, &q));
        }
        let chol = gram.cholesky().ok_or(Error::SingularHyperreducedSystem)?;
        q -= chol.solve(&grad);
    }
    unreachable!()
}
