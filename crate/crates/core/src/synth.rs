//! Synthetic ground truth, Gaussian sampling and recovery metrics.

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bcd::{solve_with, FitReport, SolveOptions};
use crate::error::{Error, Result};
use crate::matrix::SymmetricMatrix;
use crate::model::{ProblemSpec, TaskSuite};

/// Required minimum eigenvalue of every generated model.
pub const MIN_TRUTH_EIGENVALUE: f64 = 0.1;
const MAX_WEIGHT_ATTEMPTS: usize = 100;

/// A shared topology and one precision matrix per task supported on it.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    order: usize,
    /// Unordered edges `(i, j)` with `i < j`, sorted.
    edges: Vec<(usize, usize)>,
    adjacency: Vec<bool>,
    pub models: Vec<SymmetricMatrix>,
    pub density: f64,
}

impl GroundTruth {
    /// Wraps existing models; the topology is the union of their
    /// off-diagonal supports.
    pub fn from_models(models: Vec<SymmetricMatrix>) -> Result<Self> {
        let order = models
            .first()
            .ok_or_else(|| Error::DegenerateInput("ground truth needs at least one model".into()))?
            .order();
        if models.iter().any(|m| m.order() != order) {
            return Err(Error::DimensionMismatch("ground-truth models differ in order".into()));
        }
        let mut edges = Vec::new();
        for i in 0..order {
            for j in (i + 1)..order {
                if models.iter().any(|m| m.get(i, j) != 0.0) {
                    edges.push((i, j));
                }
            }
        }
        let pairs = order * (order - 1) / 2;
        let density = edges.len() as f64 / pairs as f64;
        Ok(Self::assemble(order, edges, models, density))
    }

    fn assemble(order: usize, edges: Vec<(usize, usize)>, models: Vec<SymmetricMatrix>, density: f64) -> Self {
        let mut adjacency = vec![false; order * order];
        for &(i, j) in &edges {
            adjacency[i * order + j] = true;
            adjacency[j * order + i] = true;
        }
        Self {
            order,
            edges,
            adjacency,
            models,
            density,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i * self.order + j]
    }
}

/// Draws a topology with `⌊density · N(N−1)/2⌋` edges, then per task
/// uniform `[−1, 1]` edge weights on a unit diagonal.
///
/// A task whose model has minimum eigenvalue below 0.1 is redrawn up to 100
/// times; after that the last draw is shifted by `(0.1 − λ_min + 1e-6)·I`.
pub fn generate_ground_truth(n: usize, k: usize, density: f64, seed: u64) -> Result<GroundTruth> {
    if n < 2 || k < 1 {
        return Err(Error::InvalidParameter(format!(
            "need N ≥ 2 and K ≥ 1, got N = {n}, K = {k}"
        )));
    }
    if !(density > 0.0 && density < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "density must lie in (0, 1), got {density}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
    let edge_count = (density * pairs.len() as f64).floor() as usize;
    let mut chosen = sample(&mut rng, pairs.len(), edge_count).into_vec();
    chosen.sort_unstable();
    let edges: Vec<(usize, usize)> = chosen.into_iter().map(|i| pairs[i]).collect();

    let mut models = Vec::with_capacity(k);
    for _ in 0..k {
        let mut model = None;
        let mut last = None;
        for _ in 0..MAX_WEIGHT_ATTEMPTS {
            let mut m = SymmetricMatrix::identity(n)?;
            for &(i, j) in &edges {
                m.set(i, j, rng.random_range(-1.0..=1.0));
            }
            let min_eig = m.min_eigenvalue();
            if min_eig >= MIN_TRUTH_EIGENVALUE {
                model = Some(m);
                break;
            }
            last = Some((m, min_eig));
        }
        let model = match (model, last) {
            (Some(m), _) => m,
            (None, Some((mut m, min_eig))) => {
                let shift = MIN_TRUTH_EIGENVALUE - min_eig + 1e-6;
                for i in 0..n {
                    m.set(i, i, m.get(i, i) + shift);
                }
                m
            }
            (None, None) => unreachable!("at least one attempt is made"),
        };
        models.push(model);
    }
    Ok(GroundTruth::assemble(n, edges, models, density))
}

/// Draws `counts[k]` i.i.d. samples from `N(0, Ω⁽ᵏ⁾⁻¹)` for every task;
/// each result is `T⁽ᵏ⁾ × N`.
pub fn sample_dataset(truth: &GroundTruth, counts: &[usize], seed: u64) -> Result<Vec<DMatrix<f64>>> {
    if counts.len() != truth.models.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} sample counts for {} tasks",
            counts.len(),
            truth.models.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = truth.order();
    truth
        .models
        .iter()
        .zip(counts)
        .map(|(model, &t)| {
            // x = L⁻ᵀ e with Ω = LLᵀ has covariance (LLᵀ)⁻¹
            let upper = model.cholesky()?.l().transpose();
            let noise = DMatrix::from_fn(n, t, |_, _| rng.sample::<f64, _>(StandardNormal));
            let draws = upper
                .solve_upper_triangular(&noise)
                .ok_or_else(|| Error::Numeric("singular Cholesky factor".into()))?;
            Ok(draws.transpose())
        })
        .collect()
}

/// Sample covariance of a `T × N` data matrix with divisor `T`.
///
/// With `center` the column means are removed first; otherwise the raw second
/// moment is returned (the right choice for zero-mean draws).
pub fn sample_covariance(data: &DMatrix<f64>, center: bool) -> Result<SymmetricMatrix> {
    let t = data.nrows();
    if t == 0 {
        return Err(Error::DegenerateInput("no samples".into()));
    }
    let mut x = data.clone();
    if center {
        for mut col in x.column_iter_mut() {
            let mean = col.mean();
            col.add_scalar_mut(-mean);
        }
    }
    let cov = x.transpose() * &x / t as f64;
    SymmetricMatrix::from_upper(cov)
}

/// `KL(N(0, Ω_t⁻¹) ‖ N(0, Ω_e⁻¹)) = ½(tr(Ω_e Ω_t⁻¹) − N + ln det Ω_t − ln det Ω_e)`.
pub fn kl_divergence(truth: &SymmetricMatrix, est: &SymmetricMatrix) -> Result<f64> {
    if truth.order() != est.order() {
        return Err(Error::DimensionMismatch(format!(
            "truth order {} vs estimate order {}",
            truth.order(),
            est.order()
        )));
    }
    let truth_cov = truth.inverse()?;
    let trace = est.inner_product(&truth_cov);
    Ok(0.5 * (trace - truth.order() as f64 + truth.log_det()? - est.log_det()?))
}

/// Edge-recovery rates over unordered off-diagonal pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportMetrics {
    /// One minus the fraction of true edges left out.
    pub sensitivity: f64,
    /// One minus the fraction of non-edges called.
    pub specificity: f64,
    pub threshold: f64,
}

/// The default edge-call threshold `1e-6 · maxₖ maxᵢⱼ |ω⁽ᵏ⁾ᵢⱼ|`.
pub fn default_threshold(est: &[SymmetricMatrix]) -> f64 {
    1e-6 * est.iter().map(SymmetricMatrix::max_abs).fold(0.0, f64::max)
}

/// Calls `(i, j)` an edge when `maxₖ |ω⁽ᵏ⁾ᵢⱼ| > threshold` and scores the
/// calls against the truth topology. An empty class scores 1.
pub fn support_metrics(truth: &GroundTruth, est: &[SymmetricMatrix], threshold: f64) -> Result<SupportMetrics> {
    let n = truth.order();
    if est.is_empty() || est.iter().any(|m| m.order() != n) {
        return Err(Error::DimensionMismatch(
            "estimates do not match the truth order".into(),
        ));
    }
    let (mut tp, mut pos, mut tn, mut neg) = (0usize, 0usize, 0usize, 0usize);
    for i in 0..n {
        for j in (i + 1)..n {
            let called = est.iter().any(|m| m.get(i, j).abs() > threshold);
            if truth.has_edge(i, j) {
                pos += 1;
                tp += usize::from(called);
            } else {
                neg += 1;
                tn += usize::from(!called);
            }
        }
    }
    let rate = |hit: usize, total: usize| {
        if total == 0 {
            1.0
        } else {
            hit as f64 / total as f64
        }
    };
    Ok(SupportMetrics {
        sensitivity: rate(tp, pos),
        specificity: rate(tn, neg),
        threshold,
    })
}

/// One operating point of a ρ sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub rho: f64,
    pub metrics: SupportMetrics,
    /// KL divergence from truth averaged over tasks.
    pub kl_mean: f64,
    /// Smallest eigenvalue over all tasks of the final estimate.
    pub min_eigenvalue: f64,
    pub report: FitReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocSweep {
    /// Successful points, sorted by ρ ascending.
    pub points: Vec<RocPoint>,
    /// ρ values whose solve failed, with the error text.
    pub failures: Vec<(f64, String)>,
    /// Trapezoidal area under (1 − specificity, sensitivity), anchored at
    /// (0, 0) and (1, 1); absent with fewer than two points.
    pub auc: Option<f64>,
}

/// Solves once per ρ (in parallel) and scores each estimate against the
/// truth. Failed solves are recorded and skipped.
pub fn roc_sweep(suite: &TaskSuite, truth: &GroundTruth, template: &ProblemSpec, rho_grid: &[f64]) -> Result<RocSweep> {
    roc_sweep_with(suite, truth, template, rho_grid, SolveOptions::default())
}

/// [`roc_sweep`] with explicit solver options.
pub fn roc_sweep_with(
    suite: &TaskSuite,
    truth: &GroundTruth,
    template: &ProblemSpec,
    rho_grid: &[f64],
    options: SolveOptions,
) -> Result<RocSweep> {
    if rho_grid.is_empty() {
        return Err(Error::InvalidParameter("empty rho grid".into()));
    }
    if truth.models.len() != suite.task_count() || truth.order() != suite.order() {
        return Err(Error::DimensionMismatch(
            "truth and task suite disagree in shape".into(),
        ));
    }
    let outcomes: Vec<(f64, Result<RocPoint>)> = rho_grid
        .par_iter()
        .map(|&rho| (rho, roc_point(suite, truth, &ProblemSpec { rho, ..*template }, options)))
        .collect();
    let mut points = Vec::new();
    let mut failures = Vec::new();
    for (rho, outcome) in outcomes {
        match outcome {
            Ok(p) => points.push(p),
            Err(e) => failures.push((rho, e.to_string())),
        }
    }
    points.sort_by(|a, b| a.rho.total_cmp(&b.rho));
    failures.sort_by(|a, b| a.0.total_cmp(&b.0));
    let auc = (points.len() >= 2).then(|| roc_auc(&points));
    Ok(RocSweep { points, failures, auc })
}

fn roc_point(suite: &TaskSuite, truth: &GroundTruth, spec: &ProblemSpec, options: SolveOptions) -> Result<RocPoint> {
    let (est, report) = solve_with(suite, spec, options).map_err(|e| e.error)?;
    let mats = est.matrices();
    let metrics = support_metrics(truth, mats, default_threshold(mats))?;
    let kl_mean = truth
        .models
        .iter()
        .zip(mats)
        .map(|(t, e)| kl_divergence(t, e))
        .sum::<Result<f64>>()?
        / mats.len() as f64;
    Ok(RocPoint {
        rho: spec.rho,
        metrics,
        kl_mean,
        min_eigenvalue: est.min_eigenvalues().into_iter().fold(f64::INFINITY, f64::min),
        report,
    })
}

/// Trapezoidal ROC area over the given points plus the (0,0)/(1,1) anchors.
pub fn roc_auc(points: &[RocPoint]) -> f64 {
    let mut curve: Vec<(f64, f64)> = points
        .iter()
        .map(|p| (1.0 - p.metrics.specificity, p.metrics.sensitivity))
        .chain([(0.0, 0.0), (1.0, 1.0)])
        .collect();
    curve.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    curve
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * 0.5 * (w[0].1 + w[1].1))
        .sum()
}

/// `count` logarithmically spaced values from `lo` to `hi`, ascending.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![hi],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..count)
                .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
                .collect()
        }
    }
}
