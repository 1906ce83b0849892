//! Continuous knapsack problems over `{g ≥ 0, Σg = ρ}`.
//!
//! Both variants sort breakpoints in decreasing order (stable on the
//! original index) and scan for the active prefix.

use super::newton::{bracketed_root, newton_1d, STATIONARITY_REL_TOL};
use super::{KnapsackSolution, SeparableLogarithmic};
use crate::error::{Error, Result};

fn descending_by(keys: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..keys.len()).collect();
    // sort_by is stable, so ties keep index order
    order.sort_by(|&i, &j| keys[j].total_cmp(&keys[i]));
    order
}

/// Minimizes `Σ (g_k − a_k)² / (2 q_k)` over `g ≥ 0, Σg = ρ`.
///
/// Requires `q > 0`, `a > 0` and `Σa > ρ`; the solution is
/// `g_k = max(0, a_k − ν q_k)` with `ν` found from the sorted breakpoints
/// `a_k / q_k`.
pub fn solve_quadratic_knapsack(q: &[f64], a: &[f64], rho: f64) -> Result<KnapsackSolution> {
    if q.len() != a.len() || q.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "knapsack with {} weights and {} targets",
            q.len(),
            a.len()
        )));
    }
    if !(rho > 0.0) || q.iter().any(|&v| !(v > 0.0)) || a.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::ContractViolation(
            "knapsack needs rho > 0, q > 0 and a > 0 (zero targets must be removed)".into(),
        ));
    }
    let total: f64 = a.iter().sum();
    if total <= rho {
        return Err(Error::ContractViolation(format!(
            "knapsack needs sum(a) = {total} > rho = {rho}; take the interior branch"
        )));
    }

    let breakpoints: Vec<f64> = a.iter().zip(q).map(|(a, q)| a / q).collect();
    let order = descending_by(&breakpoints);

    let (mut sum_a, mut sum_q) = (0.0, 0.0);
    let mut nu = 0.0;
    let mut active_count = order.len();
    for (idx, &k) in order.iter().enumerate() {
        sum_a += a[k];
        sum_q += q[k];
        nu = (sum_a - rho) / sum_q;
        let next = order.get(idx + 1).map_or(0.0, |&j| breakpoints[j]);
        if nu >= next {
            active_count = idx + 1;
            break;
        }
    }

    let project = |nu: f64| -> Vec<f64> { a.iter().zip(q).map(|(a, q)| (a - nu * q).max(0.0)).collect() };
    let mut g = project(nu);
    // one correction step on the active set absorbs rounding in the prefix sums
    let active_q: f64 = g.iter().zip(q).filter(|(g, _)| **g > 0.0).map(|(_, q)| q).sum();
    if active_q > 0.0 {
        let excess: f64 = g.iter().sum::<f64>() - rho;
        let corrected = nu + excess / active_q;
        let g_corrected = project(corrected);
        if (g_corrected.iter().sum::<f64>() - rho).abs() <= excess.abs() {
            nu = corrected;
            g = g_corrected;
        }
    }
    Ok(KnapsackSolution {
        g,
        nu,
        active_count,
        fallback: false,
    })
}

/// Continuous logarithmic knapsack: minimizes `−Σ q_k ln(r_k + c_k) − bᵀr`
/// over `r ≥ 0, Σr = ρ`.
///
/// For `ν > max b` the minimizer is `r_k(ν) = max(0, q_k/(ν − b_k) − c_k)`
/// with breakpoints `q_k/c_k + b_k`. The active range is located by the
/// sorted scan and `ν` is refined by Newton's method started at
/// `max(‖b‖_∞ + ε, breakpoint_{k*})`, with `ε = 1e-6·(1 + ‖b‖_∞)`.
pub fn solve_log_knapsack(prob: &SeparableLogarithmic, newton_iters: usize) -> Result<KnapsackSolution> {
    prob.validate()?;
    let SeparableLogarithmic { q, c, b, rho } = prob;
    let rho = *rho;
    let k_total = q.len();
    let b_max = b.iter().fold(0.0_f64, |m, &v| m.max(v));
    let breakpoints: Vec<f64> = (0..k_total).map(|k| q[k] / c[k] + b[k]).collect();
    let order = descending_by(&breakpoints);

    // Σ r(ν) restricted to the first `m` sorted indices
    let prefix_sum = |m: usize, nu: f64| -> f64 { order[..m].iter().map(|&k| q[k] / (nu - b[k]) - c[k]).sum() };

    let mut active_count = k_total;
    for idx in 0..k_total {
        let next = order.get(idx + 1).map_or(0.0, |&j| breakpoints[j]);
        if next <= b_max || prefix_sum(idx + 1, next) >= rho {
            active_count = idx + 1;
            break;
        }
    }
    let active = &order[..active_count];
    let pole = active.iter().fold(f64::NEG_INFINITY, |m, &k| m.max(b[k]));
    let range_lo = order.get(active_count).map_or(0.0, |&j| breakpoints[j]).max(pole);
    let range_hi = breakpoints[order[active_count - 1]];

    // increasing in ν; root at Σr(ν) = ρ
    let grad = |nu: f64| rho - active.iter().map(|&k| q[k] / (nu - b[k]) - c[k]).sum::<f64>();
    let hess = |nu: f64| active.iter().map(|&k| q[k] / (nu - b[k]).powi(2)).sum::<f64>();

    let eps = 1e-6 * (1.0 + b_max);
    let nu0 = (b_max + eps).max(range_hi);
    let lower = range_lo.max(pole + eps);
    let tol = STATIONARITY_REL_TOL * rho;
    let (mut nu, mut fallback) = match newton_1d(grad, hess, nu0, newton_iters, lower) {
        Ok(out) if out.grad.abs() <= tol && out.x > pole => (out.x, false),
        Ok(out) => (out.x, true),
        Err(_) => (nu0, true),
    };
    if fallback {
        let out = bracketed_root(grad, hess, range_lo, range_hi, nu, tol)?;
        nu = out.x;
        fallback = true;
    }
    if !(nu > pole) || !nu.is_finite() {
        return Err(Error::Numeric(format!(
            "log-knapsack multiplier {nu} not above pole {pole}"
        )));
    }
    let g = (0..k_total)
        .map(|k| {
            if nu < breakpoints[k] {
                q[k] / (nu - b[k]) - c[k]
            } else {
                0.0
            }
        })
        .map(|r| r.max(0.0))
        .collect();
    Ok(KnapsackSolution {
        g,
        nu,
        active_count,
        fallback,
    })
}
