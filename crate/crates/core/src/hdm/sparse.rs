use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Square sparse matrix in compressed-row form, as assembled from entity
/// Jacobians.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0; n + 1];
        let mut cols: Vec<usize> = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            assert!(r < n && c < n, "triplet ({r}, {c}) outside {n}x{n}");
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
                continue;
            }
            cols.push(c);
            vals.push(v);
            row_ptr[r + 1] += 1;
            last = Some((r, c));
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[range.clone()]
            .iter()
            .copied()
            .zip(self.vals[range].iter().copied())
    }

    pub fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.n, |i, _| self.row(i).map(|(j, v)| v * x[j]).sum())
    }

    pub fn mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.n, x.ncols());
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                for k in 0..x.ncols() {
                    out[(i, k)] += v * x[(j, k)];
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                out[(i, j)] += v;
            }
        }
        out
    }

    /// Lower and upper bandwidths of the sparsity pattern.
    pub fn bandwidths(&self) -> (usize, usize) {
        let mut lower = 0;
        let mut upper = 0;
        for i in 0..self.n {
            for (j, _) in self.row(i) {
                if j < i {
                    lower = lower.max(i - j);
                } else {
                    upper = upper.max(j - i);
                }
            }
        }
        (lower, upper)
    }

    /// Solves `A x = b` by banded Gaussian elimination with partial pivoting.
    pub fn solve(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        let n = self.n;
        let (kl, ku) = self.bandwidths();
        // row i keeps columns i-kl ..= i+ku+kl; the extra kl absorbs pivoting fill
        let width = 2 * kl + ku + 1;
        let mut band = vec![0.0; n * width];
        let at = |i: usize, j: usize| i * width + (j + kl - i);
        for i in 0..n {
            for (j, v) in self.row(i) {
                band[at(i, j)] += v;
            }
        }
        let mut x = b.clone();
        let scale = band.iter().fold(0.0f64, |a, v| a.max(v.abs()));

        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + ku + kl).min(n - 1);
            let mut pivot = k;
            for i in k + 1..=last_row {
                if band[at(i, k)].abs() > band[at(pivot, k)].abs() {
                    pivot = i;
                }
            }
            if !(band[at(pivot, k)].abs() > scale * f64::EPSILON) {
                return Err(Error::SingularJacobian(k));
            }
            if pivot != k {
                for j in k..=last_col {
                    band.swap(at(k, j), at(pivot, j));
                }
                x.swap_rows(k, pivot);
            }
            let diag = band[at(k, k)];
            for i in k + 1..=last_row {
                let m = band[at(i, k)] / diag;
                if m == 0.0 {
                    continue;
                }
                band[at(i, k)] = 0.0;
                for j in k + 1..=last_col {
                    band[at(i, j)] -= m * band[at(k, j)];
                }
                x[i] -= m * x[k];
            }
        }
        for k in (0..n).rev() {
            let last_col = (k + ku + kl).min(n - 1);
            let mut acc = x[k];
            for j in k + 1..=last_col {
                acc -= band[at(k, j)] * x[j];
            }
            x[k] = acc / band[at(k, k)];
        }
        Ok(x)
    }
}
