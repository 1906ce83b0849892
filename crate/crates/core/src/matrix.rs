//! Dense symmetric matrices with mirrored storage.

use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::error::{Error, Result};

const POWER_ITERATIONS: usize = 200;
const POWER_REL_TOL: f64 = 1e-12;

/// Dense real symmetric matrix of order at least 2.
///
/// The upper triangle is authoritative on construction; every write goes to
/// both `(i, j)` and `(j, i)` so the stored entries are always exactly
/// symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    inner: DMatrix<f64>,
}

impl SymmetricMatrix {
    /// Builds from a square matrix, mirroring the upper triangle into the
    /// lower one.
    pub fn from_upper(mut m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "expected a square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.nrows() < 2 {
            return Err(Error::DimensionMismatch(format!(
                "order must be at least 2, got {}",
                m.nrows()
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("matrix has non-finite entries".into()));
        }
        let n = m.nrows();
        for j in 0..n {
            for i in (j + 1)..n {
                m[(i, j)] = m[(j, i)];
            }
        }
        Ok(Self { inner: m })
    }

    /// Builds from row-major entries (upper triangle authoritative).
    pub fn from_row_major(n: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries for order {n}, got {}",
                n * n,
                entries.len()
            )));
        }
        Self::from_upper(DMatrix::from_row_slice(n, n, entries))
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::from_upper(DMatrix::identity(n, n))
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        let n = diag.len();
        Self::from_upper(DMatrix::from_fn(n, n, |i, j| if i == j { diag[i] } else { 0.0 }))
    }

    pub fn order(&self) -> usize {
        self.inner.nrows()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.inner[(i, j)]
    }

    /// Writes `value` to `(i, j)` and `(j, i)`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.inner[(i, j)] = value;
        self.inner[(j, i)] = value;
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.order()).map(|i| self.inner[(i, i)]).collect()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.inner
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.inner
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            inner: &self.inner * factor,
        }
    }

    /// Frobenius inner product `⟨self, other⟩ = tr(selfᵀ other)`.
    pub fn inner_product(&self, other: &SymmetricMatrix) -> f64 {
        self.inner.dot(&other.inner)
    }

    /// Maximum absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.inner.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn cholesky(&self) -> Result<Cholesky<f64, Dyn>> {
        Cholesky::new(self.inner.clone())
            .ok_or_else(|| Error::NotPositiveDefinite(format!("order {} matrix", self.order())))
    }

    /// `log det` of a positive definite matrix.
    pub fn log_det(&self) -> Result<f64> {
        let chol = self.cholesky()?;
        let l = chol.l_dirty();
        Ok(2.0 * (0..self.order()).map(|i| l[(i, i)].ln()).sum::<f64>())
    }

    /// Inverse of a positive definite matrix, symmetrized.
    pub fn inverse(&self) -> Result<SymmetricMatrix> {
        let inv = self.cholesky()?.inverse();
        Self::from_upper(symmetrize(inv))
    }

    /// All eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.inner.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// Spectral norm by power iteration: 200 iterations or a relative change
    /// below 1e-12, whichever comes first.
    pub fn spectral_norm(&self) -> f64 {
        let n = self.order();
        // Deterministic start with no symmetry that could hide an eigenvector.
        let mut v = nalgebra::DVector::from_fn(n, |i, _| 1.0 + (i as f64 + 1.0).sqrt() * 1e-3);
        v /= v.norm();
        let mut estimate = 0.0;
        for _ in 0..POWER_ITERATIONS {
            let w = &self.inner * &v;
            let norm = w.norm();
            if norm == 0.0 {
                return 0.0;
            }
            let converged = (norm - estimate).abs() <= POWER_REL_TOL * norm;
            estimate = norm;
            v = w / norm;
            if converged {
                break;
            }
        }
        estimate
    }

    /// Applies the same permutation to rows and columns: `out[i][j] =
    /// self[perm[i]][perm[j]]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<SymmetricMatrix> {
        let n = self.order();
        if perm.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "permutation of length {} for order {n}",
                perm.len()
            )));
        }
        Self::from_upper(DMatrix::from_fn(n, n, |i, j| self.inner[(perm[i], perm[j])]))
    }
}

/// `(A + Aᵀ) / 2`.
pub(crate) fn symmetrize(mut m: DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
    m
}
