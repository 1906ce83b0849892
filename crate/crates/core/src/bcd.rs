//! Block coordinate descent over one row/column of every precision matrix
//! at a time.
//!
//! For variable `n`, each `Ω⁽ᵏ⁾` splits into `W` (row and column `n`
//! removed), the off-diagonal column `y` and the diagonal entry `z`; the
//! covariance splits the same way into `S`, `u`, `v`. The off-diagonal
//! entries are then updated one cross-task coordinate at a time through
//! [`solve_lp_separable_quadratic`], and the diagonal entries last.
//!
//! `W⁻¹` comes from a cached inverse of the full `Ω`, downdated to remove
//! row `n` and rebuilt with the block-inverse formula after the update.
//! Both corrections are rank one, and the cache is refactorized from
//! scratch at the start of every sweep.

use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Error, Result};
use crate::matrix::SymmetricMatrix;
use crate::model::{multitask_objective, PrecisionSet, ProblemSpec, TaskSuite};
use crate::subproblem::{solve_log_subproblem, solve_lp_separable_quadratic, SeparableLogarithmic, SeparableQuadratic};

/// Diagnostics of one solve.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// Objective at the initial diagonal estimate.
    pub initial_objective: f64,
    /// Objective after each completed sweep.
    pub objective_trace: Vec<f64>,
    /// Per sweep, the minimum eigenvalue of each task's precision matrix.
    pub min_eig_trace: Vec<Vec<f64>>,
    /// Variables whose off-diagonal row was fixed at zero by screening.
    pub screened_blocks: Vec<usize>,
    pub sweeps_run: usize,
    /// Inner solves whose Newton run needed the bracketed fallback.
    pub newton_fallbacks: usize,
    /// Cached inverses rebuilt early because an update lost definiteness.
    pub inverse_recoveries: usize,
    /// Whether the relative objective change fell below the tolerance.
    pub converged: bool,
    /// Objective after every variable update (only with
    /// [`SolveOptions::trace_updates`]).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub update_objective_trace: Vec<f64>,
    /// Smallest eigenvalue over all tasks after every variable update (only
    /// with [`SolveOptions::trace_updates`]).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub update_min_eig_trace: Vec<f64>,
    /// Not serialized, so written reports stay reproducible.
    #[serde(skip)]
    pub wall_time: Duration,
}

/// Switches that do not change the optimization problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveOptions {
    /// Apply the zero-row screening test before the sweeps.
    pub screening: bool,
    /// Record objective and minimum eigenvalue after every variable update.
    /// Costs a full factorization per update; meant for small test problems.
    pub trace_updates: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            screening: true,
            trace_updates: false,
        }
    }
}

/// A failed solve, with the diagnostics gathered up to the failure.
#[derive(Debug, Error)]
#[error("solve aborted after {} sweeps: {error}", report.sweeps_run)]
pub struct SolveError {
    #[source]
    pub error: Error,
    pub report: Box<FitReport>,
}

/// `Ω⁽ᵏ⁾ = diag(Σ̂⁽ᵏ⁾)⁻¹`.
pub fn initialize(suite: &TaskSuite) -> Result<PrecisionSet> {
    let mats = suite
        .tasks()
        .iter()
        .enumerate()
        .map(|(k, t)| {
            let diag = t.covariance.diagonal();
            if let Some(n) = diag.iter().position(|&v| !(v > 0.0)) {
                return Err(Error::DegenerateInput(format!(
                    "task {k}: variable {n} has variance {}",
                    diag[n]
                )));
            }
            SymmetricMatrix::from_diagonal(&diag.iter().map(|v| 1.0 / v).collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    PrecisionSet::new(mats)
}

/// Variables whose whole off-diagonal row is zero at the optimum: those `n`
/// with `max_{n'≠n} ‖(T⁽ᵏ⁾ Σ̂⁽ᵏ⁾_{n'n})ₖ‖_p̄ ≤ ρ`.
pub fn screen_blocks(suite: &TaskSuite, spec: &ProblemSpec) -> Vec<usize> {
    let n = suite.order();
    let mut column = vec![0.0; suite.task_count()];
    (0..n)
        .filter(|&var| {
            (0..n).filter(|&other| other != var).all(|other| {
                for (slot, t) in column.iter_mut().zip(suite.tasks()) {
                    *slot = t.sample_count * t.covariance.get(other, var);
                }
                spec.norm.dual_norm(&column) <= spec.rho
            })
        })
        .collect()
}

/// Smallest ρ at which [`screen_blocks`] fixes every row to zero.
pub fn full_screening_rho(suite: &TaskSuite, spec: &ProblemSpec) -> f64 {
    let n = suite.order();
    let mut column = vec![0.0; suite.task_count()];
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            for (slot, t) in column.iter_mut().zip(suite.tasks()) {
                *slot = t.sample_count * t.covariance.get(i, j);
            }
            worst = worst.max(spec.norm.dual_norm(&column));
        }
    }
    worst
}

/// Cached `Ω⁻¹` of one task.
#[derive(Debug, Clone)]
pub struct InverseCache {
    cov: DMatrix<f64>,
}

impl InverseCache {
    pub fn from_precision(prec: &SymmetricMatrix) -> Result<Self> {
        Ok(Self {
            cov: prec.inverse()?.into_matrix(),
        })
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// `W⁻¹ = Σ_{−n,−n} − Σ_{−n,n} Σ_{n,−n} / Σ_{nn}`, or `None` on a
    /// non-positive pivot.
    fn downdate(&self, n: usize) -> Option<DMatrix<f64>> {
        let pivot = self.cov[(n, n)];
        if !(pivot > 0.0) {
            return None;
        }
        let others = others(self.cov.nrows(), n);
        let m = others.len();
        let w_inv = DMatrix::from_fn(m, m, |i, j| {
            let (a, b) = (others[i], others[j]);
            self.cov[(a, b)] - self.cov[(a, n)] * self.cov[(b, n)] / pivot
        });
        (0..m).all(|i| w_inv[(i, i)] > 0.0).then_some(w_inv)
    }

    /// Rebuilds `Ω⁻¹` after row/column `n` of `Ω` became `(y, z)` with the
    /// unchanged block `W`: with `a = W⁻¹y` and `ξ = z − yᵀa`,
    /// `Ω⁻¹ = [[W⁻¹ + aaᵀ/ξ, −a/ξ], [−aᵀ/ξ, 1/ξ]]`.
    fn commit(&mut self, n: usize, w_inv: &DMatrix<f64>, a: &[f64], schur: f64) {
        let others = others(self.cov.nrows(), n);
        for (i, &oi) in others.iter().enumerate() {
            for (j, &oj) in others.iter().enumerate() {
                self.cov[(oi, oj)] = w_inv[(i, j)] + a[i] * a[j] / schur;
            }
            self.cov[(oi, n)] = -a[i] / schur;
            self.cov[(n, oi)] = -a[i] / schur;
        }
        self.cov[(n, n)] = 1.0 / schur;
    }
}

/// Returns `W⁻¹` for variable `n`, refactorizing the cache from `prec` when
/// the rank-one downdate hits a non-positive pivot. The flag reports whether
/// that recovery happened.
pub fn update_w_inverse(cache: &mut InverseCache, prec: &SymmetricMatrix, n: usize) -> Result<(DMatrix<f64>, bool)> {
    if let Some(w_inv) = cache.downdate(n) {
        return Ok((w_inv, false));
    }
    *cache = InverseCache::from_precision(prec)
        .map_err(|e| Error::InternalState(format!("precision lost definiteness: {e}")))?;
    cache
        .downdate(n)
        .map(|w| (w, true))
        .ok_or_else(|| Error::InternalState(format!("non-positive pivot for variable {n} after refresh")))
}

fn others(n: usize, skip: usize) -> Vec<usize> {
    (0..n).filter(|&i| i != skip).collect()
}

/// Splits a matrix into `(W, y, z)` around variable `n`.
pub fn split_block(m: &SymmetricMatrix, n: usize) -> (DMatrix<f64>, Vec<f64>, f64) {
    let idx = others(m.order(), n);
    let w = DMatrix::from_fn(idx.len(), idx.len(), |i, j| m.get(idx[i], idx[j]));
    let y = idx.iter().map(|&i| m.get(i, n)).collect();
    (w, y, m.get(n, n))
}

/// Inverse of [`split_block`].
pub fn join_block(w: &DMatrix<f64>, y: &[f64], z: f64, n: usize) -> Result<SymmetricMatrix> {
    let order = w.nrows() + 1;
    let idx = others(order, n);
    let mut full = DMatrix::zeros(order, order);
    for (i, &oi) in idx.iter().enumerate() {
        for (j, &oj) in idx.iter().enumerate() {
            full[(oi, oj)] = w[(i, j)];
        }
        full[(oi, n)] = y[i];
        full[(n, oi)] = y[i];
    }
    full[(n, n)] = z;
    SymmetricMatrix::from_upper(full)
}

/// One task's view of the block for variable `n`: `W⁻¹`, the current
/// off-diagonal column `y`, and `u`, `v`, `T` from the data.
#[derive(Debug, Clone)]
pub struct BlockView {
    pub w_inv: DMatrix<f64>,
    pub y: Vec<f64>,
    pub u: Vec<f64>,
    pub v: f64,
    pub sample_count: f64,
    /// `W⁻¹y`, kept in step with `y`.
    pub w_inv_y: Vec<f64>,
}

impl BlockView {
    pub fn new(w_inv: DMatrix<f64>, y: Vec<f64>, u: Vec<f64>, v: f64, sample_count: f64) -> Self {
        let w_inv_y = (&w_inv * nalgebra::DVector::from_column_slice(&y)).as_slice().to_vec();
        Self {
            w_inv,
            y,
            u,
            v,
            sample_count,
            w_inv_y,
        }
    }

    /// `yᵀW⁻¹y`.
    pub fn quadratic_form(&self) -> f64 {
        self.y.iter().zip(&self.w_inv_y).map(|(a, b)| a * b).sum()
    }

    /// The coordinate-`i` split of `W⁻¹`, `y` and `u`.
    pub fn inner_view(&self, i: usize) -> InnerView {
        let h22 = self.w_inv[(i, i)];
        InnerView {
            h22,
            h12_dot_y1: self.w_inv_y[i] - h22 * self.y[i],
            u2: self.u[i],
            v: self.v,
            sample_count: self.sample_count,
        }
    }

    /// Sets `y_i = x`, keeping `W⁻¹y` current.
    pub fn set_coordinate(&mut self, i: usize, x: f64) {
        let delta = x - self.y[i];
        if delta == 0.0 {
            return;
        }
        self.y[i] = x;
        for (j, slot) in self.w_inv_y.iter_mut().enumerate() {
            *slot += delta * self.w_inv[(j, i)];
        }
    }
}

/// Scalars of one task that define a single off-diagonal coordinate update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerView {
    /// Diagonal entry of `W⁻¹` at the coordinate.
    pub h22: f64,
    /// `h₁₂ᵀy₁`: the rest of the column of `W⁻¹` against the rest of `y`.
    pub h12_dot_y1: f64,
    pub u2: f64,
    pub v: f64,
    pub sample_count: f64,
}

/// Solves one cross-task off-diagonal coordinate with
/// `q_k = T v h₂₂` and `c_k = −T(v h₁₂ᵀy₁ + u₂)`. Returns the new
/// coordinate per task and whether the inner Newton needed its fallback.
pub fn off_diagonal_step(views: &[InnerView], spec: &ProblemSpec) -> Result<(Vec<f64>, bool)> {
    let q = views.iter().map(|v| v.sample_count * v.v * v.h22).collect();
    let c = views
        .iter()
        .map(|v| -v.sample_count * (v.v * v.h12_dot_y1 + v.u2))
        .collect();
    let prob = SeparableQuadratic::new(q, c, spec.rho)?;
    let sol = solve_lp_separable_quadratic(&prob, spec.norm, spec.newton_iters)?;
    Ok((sol.x, sol.fallback))
}

/// New diagonal entries `z⁽ᵏ⁾`.
///
/// Unpenalized: `z = 1/v + yᵀW⁻¹y`. Penalized: solves the logarithmic
/// subproblem with `q = T`, `c = T v`, `b = yᵀW⁻¹y` and maps back through
/// `z = b + q/(c + r)`. The Schur complement `z − b` must come out positive.
pub fn diagonal_step(views: &[BlockView], spec: &ProblemSpec) -> Result<(Vec<f64>, bool)> {
    let b: Vec<f64> = views.iter().map(BlockView::quadratic_form).collect();
    let (z, fallback) = if spec.penalize_diagonal {
        let prob = SeparableLogarithmic {
            q: views.iter().map(|v| v.sample_count).collect(),
            c: views.iter().map(|v| v.sample_count * v.v).collect(),
            b: b.iter().map(|&x| x.max(0.0)).collect(),
            rho: spec.rho,
        };
        let (r, fallback) = solve_log_subproblem(&prob, spec.norm, spec.newton_iters)?;
        (prob.diagonal_from(&r), fallback)
    } else {
        (views.iter().zip(&b).map(|(v, b)| 1.0 / v.v + b).collect(), false)
    };
    for (k, (z, b)) in z.iter().zip(&b).enumerate() {
        if !(z - b > 0.0) || !z.is_finite() {
            return Err(Error::InternalState(format!(
                "task {k}: diagonal {z} does not exceed yᵀW⁻¹y = {b}"
            )));
        }
    }
    Ok((z, fallback))
}

/// Runs the block coordinate descent with default options.
pub fn solve(suite: &TaskSuite, spec: &ProblemSpec) -> std::result::Result<(PrecisionSet, FitReport), SolveError> {
    solve_with(suite, spec, SolveOptions::default())
}

/// Runs the block coordinate descent.
pub fn solve_with(
    suite: &TaskSuite,
    spec: &ProblemSpec,
    options: SolveOptions,
) -> std::result::Result<(PrecisionSet, FitReport), SolveError> {
    let start = Instant::now();
    let mut report = FitReport::default();
    let result = run(suite, spec, options, &mut report);
    report.wall_time = start.elapsed();
    match result {
        Ok(mats) => match PrecisionSet::new(mats) {
            Ok(set) => Ok((set, report)),
            Err(error) => Err(SolveError {
                error,
                report: Box::new(report),
            }),
        },
        Err(error) => Err(SolveError {
            error,
            report: Box::new(report),
        }),
    }
}

fn run(
    suite: &TaskSuite,
    spec: &ProblemSpec,
    options: SolveOptions,
    report: &mut FitReport,
) -> Result<Vec<SymmetricMatrix>> {
    spec.validate()?;
    let n = suite.order();
    let mut precs = initialize(suite)?.into_matrices();

    let screened = if options.screening {
        screen_blocks(suite, spec)
    } else {
        Vec::new()
    };
    let mut is_screened = vec![false; n];
    for &s in &screened {
        is_screened[s] = true;
    }
    report.screened_blocks = screened;

    let mut previous = multitask_objective(suite, &precs, spec)?;
    report.initial_objective = previous;

    for _sweep in 0..spec.max_sweeps {
        let mut caches = precs
            .iter()
            .map(|p| {
                InverseCache::from_precision(p)
                    .map_err(|e| Error::InternalState(format!("precision lost definiteness: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;

        for var in 0..n {
            update_variable(suite, spec, var, &is_screened, &mut precs, &mut caches, report)?;
            if options.trace_updates {
                report
                    .update_objective_trace
                    .push(multitask_objective(suite, &precs, spec)?);
                let min_eig = precs
                    .iter()
                    .map(SymmetricMatrix::min_eigenvalue)
                    .fold(f64::INFINITY, f64::min);
                report.update_min_eig_trace.push(min_eig);
            }
        }

        let current = multitask_objective(suite, &precs, spec)?;
        report.objective_trace.push(current);
        report
            .min_eig_trace
            .push(precs.iter().map(SymmetricMatrix::min_eigenvalue).collect());
        report.sweeps_run += 1;
        let change = (current - previous).abs();
        previous = current;
        if change < spec.objective_tol * current.abs() {
            report.converged = true;
            break;
        }
    }
    Ok(precs)
}

fn update_variable(
    suite: &TaskSuite,
    spec: &ProblemSpec,
    var: usize,
    is_screened: &[bool],
    precs: &mut [SymmetricMatrix],
    caches: &mut [InverseCache],
    report: &mut FitReport,
) -> Result<()> {
    let n = suite.order();
    let tasks = suite.tasks();
    let idx = others(n, var);

    if is_screened[var] {
        // the row stays zero, so W⁻¹ is untouched and only z moves
        let views: Vec<BlockView> = tasks
            .iter()
            .map(|t| BlockView {
                w_inv: DMatrix::zeros(0, 0),
                y: Vec::new(),
                u: Vec::new(),
                v: t.covariance.get(var, var),
                sample_count: t.sample_count,
                w_inv_y: Vec::new(),
            })
            .collect();
        let (z, fallback) = diagonal_step(&views, spec)?;
        report.newton_fallbacks += usize::from(fallback);
        for ((prec, cache), z) in precs.iter_mut().zip(caches.iter_mut()).zip(z) {
            prec.set(var, var, z);
            cache.cov[(var, var)] = 1.0 / z;
        }
        return Ok(());
    }

    let mut views = Vec::with_capacity(tasks.len());
    for ((t, prec), cache) in tasks.iter().zip(precs.iter()).zip(caches.iter_mut()) {
        let (w_inv, recovered) = update_w_inverse(cache, prec, var)?;
        report.inverse_recoveries += usize::from(recovered);
        let y = idx.iter().map(|&i| prec.get(i, var)).collect();
        let u = idx.iter().map(|&i| t.covariance.get(i, var)).collect();
        views.push(BlockView::new(w_inv, y, u, t.covariance.get(var, var), t.sample_count));
    }

    let z = if spec.penalize_diagonal {
        penalized_block_update(spec, &idx, is_screened, &mut views, report)?
    } else {
        inner_pass(spec, &idx, is_screened, &mut views, None, report)?;
        let (z, fallback) = diagonal_step(&views, spec)?;
        report.newton_fallbacks += usize::from(fallback);
        z
    };

    for (((prec, cache), view), z) in precs.iter_mut().zip(caches.iter_mut()).zip(&views).zip(z) {
        // refresh W⁻¹y from scratch for the commit; the running copy drifts
        let w_inv_y: Vec<f64> = (&view.w_inv * nalgebra::DVector::from_column_slice(&view.y))
            .as_slice()
            .to_vec();
        let b: f64 = view.y.iter().zip(&w_inv_y).map(|(a, b)| a * b).sum();
        let schur = z - b;
        if !(schur > 0.0) {
            return Err(Error::InternalState(format!(
                "variable {var}: Schur complement {schur} is not positive"
            )));
        }
        for (i, &orig) in idx.iter().enumerate() {
            prec.set(orig, var, view.y[i]);
        }
        prec.set(var, var, z);
        cache.commit(var, &view.w_inv, &w_inv_y, schur);
    }
    Ok(())
}

/// One cyclic pass of [`off_diagonal_step`] over the unscreened inner
/// coordinates. `curvature` replaces `v` in the coordinate models when given.
fn inner_pass(
    spec: &ProblemSpec,
    idx: &[usize],
    is_screened: &[bool],
    views: &mut [BlockView],
    curvature: Option<&[f64]>,
    report: &mut FitReport,
) -> Result<()> {
    let mut inner = Vec::with_capacity(views.len());
    for (i, &orig) in idx.iter().enumerate() {
        if is_screened[orig] {
            continue;
        }
        inner.clear();
        inner.extend(views.iter().enumerate().map(|(k, v)| {
            let mut view = v.inner_view(i);
            if let Some(kappa) = curvature {
                view.v = kappa[k];
            }
            view
        }));
        let (x, fallback) = off_diagonal_step(&inner, spec)?;
        report.newton_fallbacks += usize::from(fallback);
        for (view, x) in views.iter_mut().zip(x) {
            view.set_coordinate(i, x);
        }
    }
    Ok(())
}

/// The part of the objective that depends on block `n`:
/// `Σₖ T(ln(z − yᵀW⁻¹y) − 2uᵀy − v z) − 2ρ Σᵢ ‖yᵢ‖_p − ρ‖z‖_p`.
fn block_objective(views: &[BlockView], z: &[f64], spec: &ProblemSpec) -> f64 {
    let smooth: f64 = views
        .iter()
        .zip(z)
        .map(|(v, &z)| {
            let uy: f64 = v.u.iter().zip(&v.y).map(|(a, b)| a * b).sum();
            v.sample_count * ((z - v.quadratic_form()).ln() - 2.0 * uy - v.v * z)
        })
        .sum();
    smooth - 2.0 * spec.rho * row_penalty(views, spec) - spec.rho * spec.norm.norm(z)
}

fn row_penalty(views: &[BlockView], spec: &ProblemSpec) -> f64 {
    let len = views.first().map_or(0, |v| v.y.len());
    let mut row = vec![0.0; views.len()];
    (0..len)
        .map(|i| {
            for (slot, v) in row.iter_mut().zip(views) {
                *slot = v.y[i];
            }
            spec.norm.norm(&row)
        })
        .sum()
}

const ARMIJO_FRACTION: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 30;

/// Block update when the diagonal is penalized.
///
/// The diagonal is first set to its exact optimum for the current column.
/// The inner pass then uses the curvature `1/ξ⁽ᵏ⁾` of the current Schur
/// complement in place of `v⁽ᵏ⁾` (the two agree when the diagonal is free),
/// which makes the pass a proximal Newton step for the column with the
/// diagonal profiled out. The step is accepted by backtracking on the exact
/// block objective, re-solving the diagonal at every trial point, so the
/// objective never decreases. Returns the new diagonal.
fn penalized_block_update(
    spec: &ProblemSpec,
    idx: &[usize],
    is_screened: &[bool],
    views: &mut [BlockView],
    report: &mut FitReport,
) -> Result<Vec<f64>> {
    let (z0, fallback) = diagonal_step(views, spec)?;
    report.newton_fallbacks += usize::from(fallback);
    let base = block_objective(views, &z0, spec);
    let start: Vec<Vec<f64>> = views.iter().map(|v| v.y.clone()).collect();
    let kappa: Vec<f64> = views
        .iter()
        .zip(&z0)
        .map(|(v, z)| 1.0 / (z - v.quadratic_form()))
        .collect();

    // predicted ascent: ∇ᵧ(smooth)·d plus the change of the row penalty
    let gradient: Vec<Vec<f64>> = views
        .iter()
        .zip(&kappa)
        .map(|(v, k)| {
            v.w_inv_y
                .iter()
                .zip(&v.u)
                .map(|(a, u)| -2.0 * v.sample_count * (k * a + u))
                .collect()
        })
        .collect();
    let penalty0 = row_penalty(views, spec);

    inner_pass(spec, idx, is_screened, views, Some(&kappa), report)?;
    let step: Vec<Vec<f64>> = views
        .iter()
        .zip(&start)
        .map(|(v, y0)| v.y.iter().zip(y0).map(|(a, b)| a - b).collect())
        .collect();
    let linear: f64 = gradient
        .iter()
        .zip(&step)
        .map(|(g, d)| g.iter().zip(d).map(|(a, b)| a * b).sum::<f64>())
        .sum();
    let predicted = linear - 2.0 * spec.rho * (row_penalty(views, spec) - penalty0);

    if predicted > 0.0 {
        let mut t = 1.0;
        for _ in 0..MAX_BACKTRACKS {
            if t < 1.0 {
                for ((view, y0), d) in views.iter_mut().zip(&start).zip(&step) {
                    view.y = y0.iter().zip(d).map(|(a, b)| a + t * b).collect();
                    view.w_inv_y = (&view.w_inv * nalgebra::DVector::from_column_slice(&view.y))
                        .as_slice()
                        .to_vec();
                }
            }
            if let Ok((z, fallback)) = diagonal_step(views, spec) {
                let value = block_objective(views, &z, spec);
                if value >= base + ARMIJO_FRACTION * t * predicted {
                    report.newton_fallbacks += usize::from(fallback);
                    return Ok(z);
                }
            }
            t *= 0.5;
        }
    }
    // no acceptable step: keep the column and the optimal diagonal for it
    for (view, y0) in views.iter_mut().zip(start) {
        view.y = y0;
        view.w_inv_y = (&view.w_inv * nalgebra::DVector::from_column_slice(&view.y))
            .as_slice()
            .to_vec();
    }
    Ok(z0)
}
