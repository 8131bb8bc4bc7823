//! Lawson–Hanson active-set nonnegative least squares with early termination
//! on the relative residual.
//!
//! The passive-set subproblems are solved on the Gram matrix `CᵀC` with a
//! Cholesky factor that is grown one column at a time, so a pass costs
//! `O(k²)` after the one-off `O(m·N_e²)` Gram product. The termination test
//! always uses the residual recomputed from `C` itself.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Columns whose squared distance to the span of the passive set falls below
/// this fraction of their squared norm are treated as dependent.
const DEPENDENCE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct NnlsSolution {
    /// `(column, weight)` pairs sorted by column, every weight strictly positive.
    pub weights: Vec<(usize, f64)>,
    /// Total number of columns; absent entries are zero.
    pub len: usize,
    pub residual_norm: f64,
    /// Outer passes performed.
    pub iterations: usize,
}

impl NnlsSolution {
    pub fn support_size(&self) -> usize {
        self.weights.len()
    }

    pub fn to_dense(&self) -> DVector<f64> {
        let mut x = DVector::zeros(self.len);
        for &(j, w) in &self.weights {
            x[j] = w;
        }
        x
    }
}

/// Lower-triangular Cholesky factor of `G[P, P]`, stored row by row.
struct GrowingCholesky {
    rows: Vec<Vec<f64>>,
}

impl GrowingCholesky {
    fn new() -> Self {
        Self { rows: Vec::new() }
    }

    /// Appends column `j`; returns false (leaving the factor untouched) when
    /// it is numerically dependent on the current set.
    fn push(&mut self, gram: &DMatrix<f64>, passive: &[usize], j: usize) -> bool {
        let k = self.rows.len();
        let mut row = Vec::with_capacity(k + 1);
        for i in 0..k {
            let mut v = gram[(passive[i], j)];
            for (l, r) in row.iter().zip(&self.rows[i]) {
                v -= l * r;
            }
            row.push(v / self.rows[i][i]);
        }
        let diag_sq = gram[(j, j)] - row.iter().map(|v| v * v).sum::<f64>();
        if !(diag_sq > DEPENDENCE_TOL * gram[(j, j)]) {
            return false;
        }
        row.push(diag_sq.sqrt());
        self.rows.push(row);
        true
    }

    fn rebuild(gram: &DMatrix<f64>, passive: &[usize]) -> Option<Self> {
        let mut chol = Self::new();
        for (k, &j) in passive.iter().enumerate() {
            if !chol.push(gram, &passive[..k], j) {
                return None;
            }
        }
        Some(chol)
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let k = self.rows.len();
        let mut y = rhs.to_vec();
        for i in 0..k {
            for l in 0..i {
                y[i] -= self.rows[i][l] * y[l];
            }
            y[i] /= self.rows[i][i];
        }
        for i in (0..k).rev() {
            for l in i + 1..k {
                y[i] -= self.rows[l][i] * y[l];
            }
            y[i] /= self.rows[i][i];
        }
        y
    }
}

fn residual_norm(c: &DMatrix<f64>, d: &DVector<f64>, passive: &[usize], x: &[f64]) -> f64 {
    let mut r = -d;
    for &j in passive {
        r.axpy(x[j], &c.column(j), 1.0);
    }
    r.norm()
}

fn snapshot(passive: &[usize], x: &[f64], residual: f64, passes: usize) -> NnlsSolution {
    let mut weights: Vec<(usize, f64)> = passive
        .iter()
        .filter(|&&j| x[j] > 0.0)
        .map(|&j| (j, x[j]))
        .collect();
    weights.sort_by_key(|&(j, _)| j);
    NnlsSolution {
        weights,
        len: x.len(),
        residual_norm: residual,
        iterations: passes,
    }
}

/// `min ‖Cξ − d‖₂` over `ξ ≥ 0`, stopped as soon as `‖Cξ − d‖₂ ≤ τ‖d‖₂`.
///
/// Gives up after `10·N_e` outer passes.
pub fn nnls_early_stop(c: &DMatrix<f64>, d: &DVector<f64>, tau: f64) -> Result<NnlsSolution> {
    nnls_early_stop_with(c, d, tau, 10 * c.ncols())
}

pub fn nnls_early_stop_with(
    c: &DMatrix<f64>,
    d: &DVector<f64>,
    tau: f64,
    max_passes: usize,
) -> Result<NnlsSolution> {
    if c.nrows() != d.len() {
        return Err(Error::DimensionMismatch(format!(
            "C has {} rows but d has length {}",
            c.nrows(),
            d.len()
        )));
    }
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "tau must lie in (0, 1], got {tau}"
        )));
    }
    let d_norm = d.norm();
    if !(d_norm > 0.0) || !d_norm.is_finite() {
        return Err(Error::InvalidArgument(
            "NNLS target vector must be nonzero and finite".into(),
        ));
    }

    let ne = c.ncols();
    let target = tau * d_norm;
    let gram = c.tr_mul(c);
    let b = c.tr_mul(d);
    let col_scale = gram.diagonal().iter().fold(0.0f64, |a, v| a.max(v.sqrt()));
    let grad_tol = 10.0 * f64::EPSILON * (ne as f64).sqrt() * col_scale * d_norm;

    let mut x = vec![0.0; ne];
    let mut passive: Vec<usize> = Vec::new();
    let mut in_passive = vec![false; ne];
    let mut excluded = vec![false; ne];
    let mut chol = GrowingCholesky::new();
    let mut passes = 0;

    loop {
        let residual = residual_norm(c, d, &passive, &x);
        if residual <= target {
            return Ok(snapshot(&passive, &x, residual, passes));
        }
        let stalled = |passes| Error::NnlsNotConverged {
            passes,
            residual,
            target,
            best: Box::new(snapshot(&passive, &x, residual, passes)),
        };
        if passes >= max_passes {
            return Err(stalled(passes));
        }
        passes += 1;

        // most positive component of the negative gradient Cᵀ(d − Cx)
        let mut entering = None;
        let mut best_w = grad_tol;
        for j in 0..ne {
            if in_passive[j] || excluded[j] {
                continue;
            }
            let mut w = b[j];
            for &k in &passive {
                w -= gram[(j, k)] * x[k];
            }
            if w > best_w {
                best_w = w;
                entering = Some(j);
            }
        }
        // KKT point: the unconstrained-by-τ optimum sits above the target
        let Some(j) = entering else {
            return Err(stalled(passes));
        };

        if !chol.push(&gram, &passive, j) {
            excluded[j] = true;
            continue;
        }
        passive.push(j);
        in_passive[j] = true;

        let mut first = true;
        loop {
            let rhs: Vec<f64> = passive.iter().map(|&k| b[k]).collect();
            let z = chol.solve(&rhs);
            if first && *z.last().unwrap() <= 0.0 {
                // round-off made the entering column useless; drop it
                passive.pop();
                chol.rows.pop();
                in_passive[j] = false;
                excluded[j] = true;
                break;
            }
            first = false;

            if z.iter().all(|&v| v > 0.0) {
                for (&k, &v) in passive.iter().zip(&z) {
                    x[k] = v;
                }
                excluded.iter_mut().for_each(|e| *e = false);
                break;
            }

            // step from x toward z until the first passive weight hits zero
            let mut step = f64::INFINITY;
            for (&k, &v) in passive.iter().zip(&z) {
                if v <= 0.0 {
                    step = step.min(x[k] / (x[k] - v));
                }
            }
            for (&k, &v) in passive.iter().zip(&z) {
                x[k] += step * (v - x[k]);
            }
            let scale = passive.iter().fold(0.0f64, |a, &k| a.max(x[k].abs()));
            let drop_tol = 16.0 * f64::EPSILON * scale;
            passive.retain(|&k| {
                let keep = x[k] > drop_tol;
                if !keep {
                    x[k] = 0.0;
                    in_passive[k] = false;
                }
                keep
            });
            chol = GrowingCholesky::rebuild(&gram, &passive)
                .expect("subsets of an independent column set stay independent");
            if passive.is_empty() {
                break;
            }
        }
    }
}
