//! Independent oracles and fixtures shared by the integration tests.

#![allow(dead_code)]

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use qmor_core::hdm::{hdm_simulate, BurgersParams, FluxLaw, NewtonConfig, SourceTerm};
use qmor_core::manifold::BuildRecord;
use qmor_core::{
    BdfScheme, Manifold, ReducedBasis, SemiDiscreteModel, SnapshotSet, TimeDiscretization,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// The 512-cell benchmark integrated to `t_final`, every step kept.
pub fn burgers_benchmark(t_final: f64) -> (SemiDiscreteModel, SnapshotSet) {
    let model = SemiDiscreteModel::burgers(&BurgersParams::default()).unwrap();
    let td = TimeDiscretization::new(BdfScheme::Bdf2, 0.05).unwrap();
    let run = hdm_simulate(&model, &td, t_final, 1, &NewtonConfig::default()).unwrap();
    (model, run.snapshots)
}

pub fn orthonormal(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    let raw = DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0));
    raw.qr().q().columns(0, cols).into_owned()
}

pub fn basis_of(v: DMatrix<f64>) -> ReducedBasis {
    let n = v.ncols();
    ReducedBasis::new(v, DVector::from_fn(n, |i, _| (n - i) as f64), 0.0).unwrap()
}

pub fn fixed_record(alpha: f64) -> BuildRecord {
    BuildRecord {
        alpha_star: alpha,
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

/// `q ⊗ q` restricted to pairs `i ≤ j`, read off the full Kronecker product.
pub fn kron_oracle(q: &DVector<f64>) -> DVector<f64> {
    let n = q.len();
    let full = DVector::from_fn(n * n, |k, _| q[k / n] * q[k % n]);
    let mut out = Vec::new();
    for i in 0..n {
        for j in i..n {
            out.push(full[i * n + j]);
        }
    }
    DVector::from_vec(out)
}

pub fn random_quadratic_manifold(rng: &mut ChaCha8Rng, big_n: usize, n: usize) -> Manifold {
    let v = orthonormal(rng, big_n, n);
    let f = n * (n + 1) / 2;
    let h = DMatrix::from_fn(big_n, f, |_, _| rng.random_range(-1.0..1.0));
    let u_ref = DVector::from_fn(big_n, |_, _| rng.random_range(-1.0..1.0));
    Manifold::quadratic(basis_of(v), u_ref, &h, fixed_record(0.0)).unwrap()
}

/// `max |T_fd − T| / max |T|` with central differences of step `h`.
pub fn tangent_fd_error(m: &Manifold, q: &DVector<f64>, h: f64) -> f64 {
    let t = m.tangent(q).unwrap();
    let mut worst = 0.0f64;
    for j in 0..q.len() {
        let mut plus = q.clone();
        let mut minus = q.clone();
        plus[j] += h;
        minus[j] -= h;
        let fd = (m.evaluate(&plus).unwrap() - m.evaluate(&minus).unwrap()) / (2.0 * h);
        worst = worst.max((fd - t.column(j)).amax());
    }
    worst / t.amax()
}

/// Snapshots `u_ref + V*q + H̄*κ(q)` with `H̄*` orthogonal to `V*`.
pub struct Planted {
    pub snaps: SnapshotSet,
    pub basis: ReducedBasis,
    pub h_bar: DMatrix<f64>,
}

pub fn planted(rng: &mut ChaCha8Rng, big_n: usize, n: usize, ns: usize) -> Planted {
    let v = orthonormal(rng, big_n, n);
    let f = n * (n + 1) / 2;
    let raw = DMatrix::from_fn(big_n, f, |_, _| rng.random_range(-1.0..1.0));
    let h_bar = &raw - &v * v.tr_mul(&raw);
    let u_ref = DVector::from_fn(big_n, |_, _| rng.random_range(-1.0..1.0));
    let cols: Vec<_> = (0..ns)
        .map(|_| {
            let q = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
            &u_ref + &v * &q + &h_bar * kron_oracle(&q)
        })
        .collect();
    let snaps = SnapshotSet::new(
        DMatrix::from_columns(&cols),
        (0..ns).map(|l| l as f64).collect(),
        u_ref,
    )
    .unwrap();
    Planted {
        snaps,
        basis: basis_of(v),
        h_bar,
    }
}

/// Exact NNLS optimum by enumerating every support: the best least-squares
/// fit among supports whose unconstrained solution is strictly positive.
pub fn nnls_exhaustive(c: &DMatrix<f64>, d: &DVector<f64>) -> (DVector<f64>, f64) {
    let k = c.ncols();
    assert!(k <= 12, "exhaustive search is exponential");
    let mut best = (DVector::zeros(k), d.norm());
    for mask in 1u32..(1 << k) {
        let cols: Vec<usize> = (0..k).filter(|j| mask & (1 << j) != 0).collect();
        let sub = c.select_columns(&cols);
        let Some(z) = (sub.transpose() * &sub)
            .cholesky()
            .map(|ch| ch.solve(&(sub.transpose() * d)))
        else {
            continue;
        };
        if z.iter().any(|&v| v <= 0.0) {
            continue;
        }
        let r = (&sub * &z - d).norm();
        if r < best.1 {
            let mut x = DVector::zeros(k);
            for (&j, &v) in cols.iter().zip(z.iter()) {
                x[j] = v;
            }
            best = (x, r);
        }
    }
    best
}

/// `(Q̄Q̄ᵀ + α²I)⁻¹ Q̄·rhs` for the row problem `min ‖rhs − Q̄ᵀh‖² + α²‖h‖²`.
pub fn tikhonov_normal_equations(
    qbar: &DMatrix<f64>,
    rhs: &DVector<f64>,
    alpha: f64,
) -> DVector<f64> {
    let f = qbar.nrows();
    let lhs = qbar * qbar.transpose() + DMatrix::identity(f, f) * (alpha * alpha);
    lhs.lu().solve(&(qbar * rhs)).unwrap()
}

/// GCV through the explicit influence matrix `A = Q̄ᵀ(Q̄Q̄ᵀ + α²I)⁻¹Q̄`:
/// `‖(I − A)·rhs‖² / tr(I − A)²`.
pub fn gcv_influence(qbar: &DMatrix<f64>, rhs: &DVector<f64>, alpha: f64) -> f64 {
    let f = qbar.nrows();
    let ns = qbar.ncols();
    let inner = (qbar * qbar.transpose() + DMatrix::identity(f, f) * (alpha * alpha))
        .try_inverse()
        .unwrap();
    let a = qbar.transpose() * inner * qbar;
    let i_minus_a = DMatrix::identity(ns, ns) - a;
    let misfit = (&i_minus_a * rhs).norm_squared();
    let trace = i_minus_a.trace();
    misfit / (trace * trace)
}

/// `max |J − J_fd| / max |J|` for the discrete residual at a random state.
pub fn jacobian_fd_error(
    model: &SemiDiscreteModel,
    u: &DVector<f64>,
    t: f64,
    td: &TimeDiscretization,
) -> f64 {
    let j = model.jacobian(u, t, td).unwrap().to_dense();
    let h = 1e-6;
    let mut worst = 0.0f64;
    for k in 0..u.len() {
        let mut plus = u.clone();
        let mut minus = u.clone();
        plus[k] += h;
        minus[k] -= h;
        let fd = (model.discrete_residual(&plus, t, td).unwrap()
            - model.discrete_residual(&minus, t, td).unwrap())
            / (2.0 * h);
        worst = worst.max((fd - j.column(k)).amax());
    }
    worst / j.amax()
}

/// Smooth exact solution of the semi-discrete Burgers system: the source
/// is manufactured cell by cell so that `u_i(t) = 1 + ½·sin(t + x_i/10)`
/// solves it exactly, leaving only the time-integration error.
pub fn manufactured_model(cells: usize) -> SemiDiscreteModel {
    let length = 10.0;
    let dx = length / cells as f64;
    let inflow = 1.0;
    let exact = |x: f64, t: f64| 1.0 + 0.5 * (t + x / 10.0).sin();
    let rate = |x: f64, t: f64| 0.5 * (t + x / 10.0).cos();
    let burgers = FluxLaw::Burgers;
    let source = SourceTerm::Custom(Arc::new(move |x, t| {
        let up = if x < dx { inflow } else { exact(x - dx, t) };
        rate(x, t) + (burgers.flux(exact(x, t)) - burgers.flux(up)) / dx
    }));
    SemiDiscreteModel::upwind_1d(cells, length, FluxLaw::Burgers, source, inflow, move |x| {
        exact(x, 0.0)
    })
    .unwrap()
}

/// Max-norm error at `t_final` of the manufactured problem for each `dt`.
pub fn manufactured_errors(scheme: BdfScheme, dts: &[f64], t_final: f64) -> Vec<f64> {
    let model = manufactured_model(40);
    let newton = NewtonConfig {
        tol_rel: 1e-14,
        tol_abs: 1e-13,
        max_iters: 25,
    };
    dts.iter()
        .map(|&dt| {
            let td = TimeDiscretization::new(scheme, dt).unwrap();
            let run = hdm_simulate(&model, &td, t_final, 1, &newton).unwrap();
            let last = run.snapshots.column(run.snapshots.len() - 1);
            let exact = DVector::from_iterator(
                model.dimension(),
                model
                    .centers()
                    .iter()
                    .map(|&x| 1.0 + 0.5 * (t_final + x / 10.0).sin()),
            );
            (last - exact).amax()
        })
        .collect()
}
