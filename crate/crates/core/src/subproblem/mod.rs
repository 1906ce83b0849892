//! Inner problems of the block coordinate descent.
//!
//! Every off-diagonal update reduces to an ℓp-regularized separable
//! quadratic
//!
//! ```text
//! min_x ½ xᵀ diag(q) x − cᵀx + ρ‖x‖_p
//! ```
//!
//! whose dual is a continuous quadratic knapsack for p = ∞ and a separable
//! trust-region problem for p = 2. With a penalized diagonal, each diagonal
//! update reduces to the logarithmic counterparts of those two problems.

mod knapsack;
mod newton;
mod trust_region;

pub use knapsack::{solve_log_knapsack, solve_quadratic_knapsack};
pub use newton::{bracketed_root, newton_1d, NewtonOutcome, MAX_FALLBACK_STEPS, STATIONARITY_REL_TOL};
pub use trust_region::{log_trust_region_point, solve_log_trust_region, solve_trust_region_dual};

use crate::error::{Error, Result};
use crate::model::NormOrder;

/// Data `(q, c, ρ)` of `min ½ xᵀdiag(q)x − cᵀx + ρ‖x‖_p`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableQuadratic {
    pub q: Vec<f64>,
    pub c: Vec<f64>,
    pub rho: f64,
}

impl SeparableQuadratic {
    pub fn new(q: Vec<f64>, c: Vec<f64>, rho: f64) -> Result<Self> {
        let p = Self { q, c, rho };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.q.len() != self.c.len() || self.q.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "{} quadratic weights for {} linear terms",
                self.q.len(),
                self.c.len()
            )));
        }
        if !(self.rho > 0.0) || self.q.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidParameter(
                "separable quadratic needs q > 0 and rho > 0".into(),
            ));
        }
        if self.c.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite linear term".into()));
        }
        Ok(())
    }

    /// `½ xᵀdiag(q)x − cᵀx + ρ‖x‖_p`.
    pub fn objective(&self, x: &[f64], norm: NormOrder) -> f64 {
        let smooth: f64 = x
            .iter()
            .zip(&self.q)
            .zip(&self.c)
            .map(|((x, q), c)| 0.5 * q * x * x - c * x)
            .sum();
        smooth + self.rho * norm.norm(x)
    }
}

/// Data `(q, c, b, ρ)` of the logarithmic subproblem
/// `min −Σ q_k ln(r_k + c_k) − bᵀr` over `r ≥ 0, ‖r‖_p̄ = ρ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableLogarithmic {
    pub q: Vec<f64>,
    pub c: Vec<f64>,
    pub b: Vec<f64>,
    pub rho: f64,
}

impl SeparableLogarithmic {
    pub fn validate(&self) -> Result<()> {
        let k = self.q.len();
        if k == 0 || self.c.len() != k || self.b.len() != k {
            return Err(Error::DimensionMismatch(
                "logarithmic subproblem vectors differ in length".into(),
            ));
        }
        let positive = |v: &[f64]| v.iter().all(|&x| x > 0.0 && x.is_finite());
        if !(self.rho > 0.0)
            || !positive(&self.q)
            || !positive(&self.c)
            || self.b.iter().any(|&x| !(x >= 0.0 && x.is_finite()))
        {
            return Err(Error::InvalidParameter(
                "logarithmic subproblem needs q > 0, c > 0, b ≥ 0 and rho > 0".into(),
            ));
        }
        Ok(())
    }

    /// The diagonal values `z_k = b_k + q_k / (c_k + r_k)` for a dual point.
    pub fn diagonal_from(&self, r: &[f64]) -> Vec<f64> {
        (0..self.q.len())
            .map(|k| self.b[k] + self.q[k] / (self.c[k] + r[k]))
            .collect()
    }

    /// `−Σ q_k ln(r_k + c_k) − bᵀr`.
    pub fn objective(&self, r: &[f64]) -> f64 {
        (0..self.q.len())
            .map(|k| -self.q[k] * (r[k] + self.c[k]).ln() - self.b[k] * r[k])
            .sum()
    }
}

/// Solution of a continuous knapsack: `g` holds the primal point (the `r`
/// vector for the logarithmic variant), `nu` the multiplier of `Σg = ρ`.
#[derive(Debug, Clone, PartialEq)]
pub struct KnapsackSolution {
    pub g: Vec<f64>,
    pub nu: f64,
    /// Number of breakpoints in the active prefix.
    pub active_count: usize,
    /// Whether Newton needed the bracketed fallback.
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrustRegionSolution {
    pub x: Vec<f64>,
    pub lambda: f64,
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogTrustRegionSolution {
    pub r: Vec<f64>,
    pub lambda: f64,
    pub fallback: bool,
}

/// Minimizer of a separable quadratic plus its solver diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticSolution {
    pub x: Vec<f64>,
    pub fallback: bool,
}

/// Minimizes `½ xᵀdiag(q)x − cᵀx + ρ‖x‖_p` for p ∈ {2, ∞}.
///
/// Coordinates with `c_k = 0` are fixed at zero. If the remaining `c` lies
/// in the dual-norm ball of radius ρ the minimizer is zero; otherwise the
/// knapsack (p = ∞) or trust-region (p = 2) dual is solved and mapped back.
pub fn solve_lp_separable_quadratic(
    prob: &SeparableQuadratic,
    norm: NormOrder,
    newton_iters: usize,
) -> Result<QuadraticSolution> {
    prob.validate()?;
    let k_total = prob.q.len();
    let support: Vec<usize> = (0..k_total).filter(|&k| prob.c[k] != 0.0).collect();
    let mut x = vec![0.0; k_total];
    let c: Vec<f64> = support.iter().map(|&k| prob.c[k]).collect();
    let q: Vec<f64> = support.iter().map(|&k| prob.q[k]).collect();
    if support.is_empty() || norm.dual_norm(&c) <= prob.rho {
        return Ok(QuadraticSolution { x, fallback: false });
    }
    let fallback = match norm {
        NormOrder::LInf => {
            let a: Vec<f64> = c.iter().map(|v| v.abs()).collect();
            let sol = solve_quadratic_knapsack(&q, &a, prob.rho)?;
            for (i, &k) in support.iter().enumerate() {
                x[k] = (c[i] - c[i].signum() * sol.g[i]) / q[i];
            }
            sol.fallback
        }
        NormOrder::L2 => {
            let sol = solve_trust_region_dual(&q, &c, prob.rho, newton_iters)?;
            for (i, &k) in support.iter().enumerate() {
                x[k] = sol.x[i];
            }
            sol.fallback
        }
    };
    Ok(QuadraticSolution { x, fallback })
}

/// Solves the logarithmic diagonal subproblem for the given norm and
/// returns `(r, fallback)`.
pub fn solve_log_subproblem(
    prob: &SeparableLogarithmic,
    norm: NormOrder,
    newton_iters: usize,
) -> Result<(Vec<f64>, bool)> {
    match norm {
        NormOrder::LInf => solve_log_knapsack(prob, newton_iters).map(|s| (s.g, s.fallback)),
        NormOrder::L2 => solve_log_trust_region(prob, newton_iters).map(|s| (s.r, s.fallback)),
    }
}
