//! Separable trust-region problems solved through their one-dimensional dual.

use super::newton::{bracketed_root, newton_1d, STATIONARITY_REL_TOL};
use super::{LogTrustRegionSolution, SeparableLogarithmic, TrustRegionSolution};
use crate::error::{Error, Result};

/// Solves `min_{λ≥0} Σ c_k²/(q_k + λq_k²) + ρ²λ` by Newton's method from
/// `λ = 0`, then maps back to `x_k = λc_k / (1 + λq_k)`.
///
/// Requires `‖c‖₂ > ρ`, so the constraint `‖c/(1+λq)‖₂ ≤ ρ` is active.
pub fn solve_trust_region_dual(q: &[f64], c: &[f64], rho: f64, iters: usize) -> Result<TrustRegionSolution> {
    if q.len() != c.len() || q.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "trust region with {} weights and {} targets",
            q.len(),
            c.len()
        )));
    }
    if !(rho > 0.0) || q.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::ContractViolation("trust region needs rho > 0 and q > 0".into()));
    }
    let c_norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
    if c_norm <= rho {
        return Err(Error::ContractViolation(format!(
            "trust region needs ‖c‖₂ = {c_norm} > rho = {rho}; take the interior branch"
        )));
    }
    let rho2 = rho * rho;
    // derivative of the dual: ρ² − ‖c/(1+λq)‖²
    let grad = |l: f64| rho2 - c.iter().zip(q).map(|(c, q)| (c / (1.0 + l * q)).powi(2)).sum::<f64>();
    let hess = |l: f64| {
        c.iter()
            .zip(q)
            .map(|(c, q)| 2.0 * c * c * q / (1.0 + l * q).powi(3))
            .sum::<f64>()
    };
    let tol = STATIONARITY_REL_TOL * rho2;
    let out = newton_1d(grad, hess, 0.0, iters, 0.0)?;
    let (lambda, fallback) = if out.grad.abs() <= tol {
        (out.x, false)
    } else {
        // at λ_hi every |c_k|/(1+λq_k) ≤ |c_k|/(1+λ min q) shrinks ‖·‖₂ to ρ
        let q_min = q.iter().fold(f64::INFINITY, |m, &v| m.min(v));
        let hi = (c_norm / rho - 1.0) / q_min;
        let lo = if out.grad < 0.0 { out.x } else { 0.0 };
        let hi = if out.grad > 0.0 { out.x.min(hi) } else { hi };
        // widen a touch so a root sitting exactly on an endpoint stays interior
        let refined = bracketed_root(grad, hess, lo, hi * (1.0 + 1e-12) + f64::MIN_POSITIVE, out.x, tol)?;
        (refined.x, true)
    };
    let x = c.iter().zip(q).map(|(c, q)| lambda * c / (1.0 + lambda * q)).collect();
    Ok(TrustRegionSolution { x, lambda, fallback })
}

/// `r_k(λ)`, the minimizer of the Lagrangian of the logarithmic trust-region
/// problem for fixed `λ > 0`.
///
/// Uses the rationalized form `2(q + bc)/(√D + λc − b)` when `λc ≥ b` and
/// the direct form `(b − λc + √D)/(2λ)` otherwise, where
/// `D = (b + λc)² + 4λq`.
pub fn log_trust_region_point(q: f64, c: f64, b: f64, lambda: f64) -> f64 {
    let disc = ((b + lambda * c).powi(2) + 4.0 * lambda * q).sqrt();
    if lambda * c >= b {
        2.0 * (q + b * c) / (disc + lambda * c - b)
    } else {
        (b - lambda * c + disc) / (2.0 * lambda)
    }
}

/// Solves `min −Σ q_k ln(r_k + c_k) − bᵀr` over `r ≥ 0, ‖r‖₂ ≤ ρ` by
/// Newton's method on the concave dual in `λ`, initialized at the average of
/// the single-task optima `(q_k + b_k(c_k+ρ)) / (ρ(c_k+ρ))`.
pub fn solve_log_trust_region(prob: &SeparableLogarithmic, newton_iters: usize) -> Result<LogTrustRegionSolution> {
    prob.validate()?;
    let SeparableLogarithmic { q, c, b, rho } = prob;
    let rho = *rho;
    let k_total = q.len();
    let single = |k: usize, s: f64| (q[k] + b[k] * (c[k] + s)) / (s * (c[k] + s));

    let r_at = |l: f64| -> Vec<f64> {
        (0..k_total)
            .map(|k| log_trust_region_point(q[k], c[k], b[k], l))
            .collect()
    };
    // minimize the negated dual: derivative ½(ρ² − ‖r‖²), curvature −Σ r r'
    let grad = |l: f64| 0.5 * (rho * rho - r_at(l).iter().map(|r| r * r).sum::<f64>());
    let hess = |l: f64| {
        (0..k_total)
            .map(|k| {
                let r = log_trust_region_point(q[k], c[k], b[k], l);
                r * r / (l + q[k] / (r + c[k]).powi(2))
            })
            .sum::<f64>()
    };

    // at lo every r_k ≥ ρ, at hi every r_k ≤ ρ/√K
    let lo = (0..k_total).map(|k| single(k, rho)).fold(f64::INFINITY, f64::min);
    let hi = (0..k_total)
        .map(|k| single(k, rho / (k_total as f64).sqrt()))
        .fold(0.0_f64, f64::max);
    let lambda0 = (0..k_total).map(|k| single(k, rho)).sum::<f64>() / k_total as f64;

    let tol = STATIONARITY_REL_TOL * rho * rho;
    let (lambda, fallback) = match newton_1d(grad, hess, lambda0, newton_iters, lo) {
        Ok(out) if out.grad.abs() <= tol => (out.x, false),
        Ok(out) => (
            bracketed_root(grad, hess, lo * (1.0 - 1e-12), hi * (1.0 + 1e-12), out.x, tol)?.x,
            true,
        ),
        Err(_) => (
            bracketed_root(grad, hess, lo * (1.0 - 1e-12), hi * (1.0 + 1e-12), lambda0, tol)?.x,
            true,
        ),
    };
    let r = r_at(lambda);
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!(
            "non-finite log trust-region point at λ = {lambda}"
        )));
    }
    Ok(LogTrustRegionSolution { r, lambda, fallback })
}
