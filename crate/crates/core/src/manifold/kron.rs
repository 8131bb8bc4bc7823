use nalgebra::{DMatrix, DVector};

/// `n(n+1)/2`, the number of distinct entries of `q ⊗ q`.
pub fn feature_count(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Lexicographic enumeration of the pairs `(i, j)`, `i ≤ j < n`, that index
/// the deduplicated quadratic features.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadraticFeatureIndex {
    n: usize,
    pairs: Vec<(usize, usize)>,
}

impl QuadraticFeatureIndex {
    pub fn new(n: usize) -> Self {
        let pairs = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
        Self { n, pairs }
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn pair(&self, flat: usize) -> (usize, usize) {
        self.pairs[flat]
    }

    /// Flat position of `(i, j)`; the order of the arguments does not matter.
    pub fn flat_index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        debug_assert!(j < self.n);
        // rows 0..i hold n + (n−1) + … + (n−i+1) pairs
        i * (2 * self.n - i - 1) / 2 + j
    }
}

/// `κ(q)` with `κ[(i, j)] = q_i·q_j` for `i ≤ j`; off-diagonal products are
/// not doubled.
pub fn unique_kron(q: &DVector<f64>) -> DVector<f64> {
    let n = q.len();
    let mut out = DVector::zeros(feature_count(n));
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            out[k] = q[i] * q[j];
            k += 1;
        }
    }
    out
}

/// `∂κ/∂q`, an `n(n+1)/2 × n` matrix with two nonzeros per row
/// (one, equal to `2q_i`, on diagonal pairs).
pub fn unique_kron_tangent(q: &DVector<f64>) -> DMatrix<f64> {
    let n = q.len();
    let mut out = DMatrix::zeros(feature_count(n), n);
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            out[(k, i)] += q[j];
            out[(k, j)] += q[i];
            k += 1;
        }
    }
    out
}
