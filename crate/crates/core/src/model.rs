//! Problem data, the penalized multi-task likelihood and its diagnostics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::SymmetricMatrix;

/// One task: a sample covariance and the number of samples behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub covariance: SymmetricMatrix,
    pub sample_count: f64,
}

/// The immutable problem data: K covariances of a common order N.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskSuite {
    tasks: Vec<Task>,
}

impl TaskSuite {
    /// Validates and wraps the tasks.
    ///
    /// Every covariance must share the same order, be positive semidefinite
    /// up to `1e-8 * (1 + max diagonal)`, and carry a positive sample count.
    pub fn new(tasks: Vec<Task>) -> Result<Self> {
        let first = tasks
            .first()
            .ok_or_else(|| Error::DegenerateInput("a task suite needs at least one task".into()))?;
        let n = first.covariance.order();
        for (k, task) in tasks.iter().enumerate() {
            if task.covariance.order() != n {
                return Err(Error::DimensionMismatch(format!(
                    "task {k} has order {}, expected {n}",
                    task.covariance.order()
                )));
            }
            if !(task.sample_count > 0.0 && task.sample_count.is_finite()) {
                return Err(Error::DegenerateInput(format!(
                    "task {k} has sample count {}",
                    task.sample_count
                )));
            }
            let max_diag = task.covariance.diagonal().into_iter().fold(0.0_f64, f64::max);
            let tol = 1e-8 * (1.0 + max_diag);
            let min_eig = task.covariance.min_eigenvalue();
            if min_eig < -tol {
                return Err(Error::DegenerateInput(format!(
                    "task {k} covariance is not positive semidefinite (min eigenvalue {min_eig:e})"
                )));
            }
        }
        Ok(Self { tasks })
    }

    /// Convenience constructor from parallel covariance / count lists.
    pub fn from_parts(covariances: Vec<SymmetricMatrix>, sample_counts: &[f64]) -> Result<Self> {
        if covariances.len() != sample_counts.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} covariances but {} sample counts",
                covariances.len(),
                sample_counts.len()
            )));
        }
        Self::new(
            covariances
                .into_iter()
                .zip(sample_counts)
                .map(|(covariance, &sample_count)| Task {
                    covariance,
                    sample_count,
                })
                .collect(),
        )
    }

    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }

    pub fn task_count(&self) -> usize {
        self.tasks.len()
    }

    pub fn order(&self) -> usize {
        self.tasks[0].covariance.order()
    }

    pub fn total_samples(&self) -> f64 {
        self.tasks.iter().map(|t| t.sample_count).sum()
    }

    /// The suite with variables relabelled by `perm` in every task.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        Self::new(
            self.tasks
                .iter()
                .map(|t| {
                    Ok(Task {
                        covariance: t.covariance.permuted(perm)?,
                        sample_count: t.sample_count,
                    })
                })
                .collect::<Result<_>>()?,
        )
    }
}

/// Exponent p of the cross-task norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NormOrder {
    #[serde(rename = "2")]
    L2,
    #[serde(rename = "inf")]
    LInf,
}

impl NormOrder {
    /// p as a float (`f64::INFINITY` for [`NormOrder::LInf`]).
    pub fn exponent(self) -> f64 {
        match self {
            NormOrder::L2 => 2.0,
            NormOrder::LInf => f64::INFINITY,
        }
    }

    /// The dual exponent p̄ with 1/p + 1/p̄ = 1.
    pub fn dual_exponent(self) -> f64 {
        match self {
            NormOrder::L2 => 2.0,
            NormOrder::LInf => 1.0,
        }
    }

    pub fn norm(self, v: &[f64]) -> f64 {
        match self {
            NormOrder::L2 => euclidean(v),
            NormOrder::LInf => v.iter().fold(0.0_f64, |m, x| m.max(x.abs())),
        }
    }

    pub fn dual_norm(self, v: &[f64]) -> f64 {
        match self {
            NormOrder::L2 => euclidean(v),
            NormOrder::LInf => v.iter().map(|x| x.abs()).sum(),
        }
    }
}

impl std::fmt::Display for NormOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NormOrder::L2 => f.write_str("2"),
            NormOrder::LInf => f.write_str("inf"),
        }
    }
}

impl std::str::FromStr for NormOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "2" | "l2" => Ok(NormOrder::L2),
            "inf" | "infinity" | "linf" => Ok(NormOrder::LInf),
            other => Err(Error::InvalidParameter(format!("unsupported norm order {other:?}"))),
        }
    }
}

fn euclidean(v: &[f64]) -> f64 {
    // hypot-style scaling keeps tiny and huge entries from under/overflowing
    let scale = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    scale * v.iter().map(|x| (x / scale).powi(2)).sum::<f64>().sqrt()
}

/// Regularization level, norm and iteration controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub rho: f64,
    pub norm: NormOrder,
    pub penalize_diagonal: bool,
    pub max_sweeps: usize,
    /// Relative objective change over a full sweep below which the solve
    /// stops. Zero runs all `max_sweeps` sweeps.
    pub objective_tol: f64,
    pub newton_iters: usize,
}

impl ProblemSpec {
    pub const DEFAULT_MAX_SWEEPS: usize = 10;
    pub const DEFAULT_OBJECTIVE_TOL: f64 = 1e-6;
    pub const DEFAULT_NEWTON_ITERS: usize = 10;

    pub fn new(rho: f64, norm: NormOrder) -> Self {
        Self {
            rho,
            norm,
            penalize_diagonal: false,
            max_sweeps: Self::DEFAULT_MAX_SWEEPS,
            objective_tol: Self::DEFAULT_OBJECTIVE_TOL,
            newton_iters: Self::DEFAULT_NEWTON_ITERS,
        }
    }

    pub fn with_penalized_diagonal(mut self, on: bool) -> Self {
        self.penalize_diagonal = on;
        self
    }

    pub fn with_max_sweeps(mut self, sweeps: usize) -> Self {
        self.max_sweeps = sweeps;
        self
    }

    pub fn with_objective_tol(mut self, tol: f64) -> Self {
        self.objective_tol = tol;
        self
    }

    pub fn with_newton_iters(mut self, iters: usize) -> Self {
        self.newton_iters = iters;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "rho must be positive, got {}",
                self.rho
            )));
        }
        if self.max_sweeps == 0 {
            return Err(Error::InvalidParameter("max_sweeps must be at least 1".into()));
        }
        if self.newton_iters == 0 {
            return Err(Error::InvalidParameter("newton_iters must be at least 1".into()));
        }
        if !(self.objective_tol >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "objective_tol must be nonnegative, got {}",
                self.objective_tol
            )));
        }
        Ok(())
    }
}

/// K positive definite precision matrices of a common order.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionSet {
    matrices: Vec<SymmetricMatrix>,
}

impl PrecisionSet {
    pub fn new(matrices: Vec<SymmetricMatrix>) -> Result<Self> {
        let n = matrices
            .first()
            .ok_or_else(|| Error::DegenerateInput("empty precision set".into()))?
            .order();
        for (k, m) in matrices.iter().enumerate() {
            if m.order() != n {
                return Err(Error::DimensionMismatch(format!(
                    "precision {k} has order {}, expected {n}",
                    m.order()
                )));
            }
            m.cholesky()
                .map_err(|_| Error::NotPositiveDefinite(format!("precision matrix {k}")))?;
        }
        Ok(Self { matrices })
    }

    pub fn matrices(&self) -> &[SymmetricMatrix] {
        &self.matrices
    }

    pub fn into_matrices(self) -> Vec<SymmetricMatrix> {
        self.matrices
    }

    pub fn task_count(&self) -> usize {
        self.matrices.len()
    }

    pub fn order(&self) -> usize {
        self.matrices[0].order()
    }

    /// Smallest eigenvalue of each matrix.
    pub fn min_eigenvalues(&self) -> Vec<f64> {
        self.matrices.iter().map(SymmetricMatrix::min_eigenvalue).collect()
    }
}

/// Eigenvalue bounds satisfied by the optimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenBounds {
    /// `1 / (‖Σ̂⁽ᵏ⁾‖₂ + Nρ/T⁽ᵏ⁾)` per task.
    pub lower: Vec<f64>,
    /// `N·Σₖ T⁽ᵏ⁾ / ρ`.
    pub upper: f64,
}

/// Gaussian log-likelihood `log det Ω − ⟨Σ̂, Ω⟩` (no ½ factor, no constant).
pub fn gaussian_log_likelihood(cov: &SymmetricMatrix, prec: &SymmetricMatrix) -> Result<f64> {
    if cov.order() != prec.order() {
        return Err(Error::DimensionMismatch(format!(
            "covariance order {} vs precision order {}",
            cov.order(),
            prec.order()
        )));
    }
    Ok(prec.log_det()? - cov.inner_product(prec))
}

fn check_stack(mats: &[SymmetricMatrix]) -> Result<usize> {
    let n = mats
        .first()
        .ok_or_else(|| Error::DegenerateInput("empty matrix stack".into()))?
        .order();
    if let Some(bad) = mats.iter().find(|m| m.order() != n) {
        return Err(Error::DimensionMismatch(format!(
            "matrix order {} in a stack of order {n}",
            bad.order()
        )));
    }
    Ok(n)
}

/// `Σ_{n1,n2} ‖(ω⁽¹⁾_{n1n2}, …, ω⁽ᴷ⁾_{n1n2})‖_p` over all N² positions.
pub fn l1p_norm(mats: &[SymmetricMatrix], norm: NormOrder) -> Result<f64> {
    penalty(mats, norm, true)
}

/// The ℓ1,p penalty, over all positions or off-diagonal positions only.
pub fn penalty(mats: &[SymmetricMatrix], norm: NormOrder, include_diagonal: bool) -> Result<f64> {
    let n = check_stack(mats)?;
    let mut column = vec![0.0; mats.len()];
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j && !include_diagonal {
                continue;
            }
            for (slot, m) in column.iter_mut().zip(mats) {
                *slot = m.get(i, j);
            }
            total += norm.norm(&column);
        }
    }
    Ok(total)
}

fn check_pairing(suite: &TaskSuite, mats: &[SymmetricMatrix]) -> Result<()> {
    let n = check_stack(mats)?;
    if mats.len() != suite.task_count() || n != suite.order() {
        return Err(Error::DimensionMismatch(format!(
            "{} precisions of order {n} for {} tasks of order {}",
            mats.len(),
            suite.task_count(),
            suite.order()
        )));
    }
    Ok(())
}

/// `Σₖ T⁽ᵏ⁾ ℓ(Ω⁽ᵏ⁾) − ρ R(Ω)` where `R` skips the diagonal unless
/// `spec.penalize_diagonal` is set.
pub fn multitask_objective(suite: &TaskSuite, mats: &[SymmetricMatrix], spec: &ProblemSpec) -> Result<f64> {
    check_pairing(suite, mats)?;
    let mut fit = 0.0;
    for (task, prec) in suite.tasks().iter().zip(mats) {
        fit += task.sample_count * gaussian_log_likelihood(&task.covariance, prec)?;
    }
    Ok(fit - spec.rho * penalty(mats, spec.norm, spec.penalize_diagonal)?)
}

/// Eigenvalue bounds on the optimum. The upper bound is a theorem only when
/// the diagonal is penalized.
pub fn eigenvalue_bounds(suite: &TaskSuite, spec: &ProblemSpec) -> EigenBounds {
    let n = suite.order() as f64;
    let lower = suite
        .tasks()
        .iter()
        .map(|t| 1.0 / (t.covariance.spectral_norm() + n * spec.rho / t.sample_count))
        .collect();
    EigenBounds {
        lower,
        upper: n * suite.total_samples() / spec.rho,
    }
}

/// `|−N·Σₖ T⁽ᵏ⁾ + Σₖ T⁽ᵏ⁾⟨Σ̂⁽ᵏ⁾, Ω⁽ᵏ⁾⟩ + ρR|`, which vanishes at the optimum.
///
/// A convergence diagnostic, not a certified duality gap.
pub fn optimality_residual(suite: &TaskSuite, mats: &[SymmetricMatrix], spec: &ProblemSpec) -> Result<f64> {
    check_pairing(suite, mats)?;
    let n = suite.order() as f64;
    let linear: f64 = suite
        .tasks()
        .iter()
        .zip(mats)
        .map(|(t, m)| t.sample_count * t.covariance.inner_product(m))
        .sum();
    let r = penalty(mats, spec.norm, spec.penalize_diagonal)?;
    Ok((-n * suite.total_samples() + linear + spec.rho * r).abs())
}
